//! Grid covers of the observation cube `[0, 1]^M`.
//!
//! The cube is cut into `t^M` congruent cells with
//! `t = ceil((1 + dim_factor) / epsilon * omega * sqrt(M))`, so two
//! observations in one cell are within `epsilon / (omega * (1 + dim_factor))`.
//! Keeping one training signal per occupied cell and fitting the
//! McShane-Whitney extension with the set constant `omega` recovers every
//! signal of the set to within `epsilon`.
//!
//! Cells are half-open, `[j/t, (j+1)/t)`, except that the face at 1 is
//! closed. Only occupied cells are stored.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::labeled::{LabeledPair, LabeledSet};
use crate::lipschitz::verify_lipschitz;
use crate::mwet::MwetHypothesis;
use crate::tol::TOL_CERT;
use crate::vector::dist;

/// Which output dimension the extension factor accounts for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Full recovery in `R^N`: factor `sqrt(N)`.
    Full,
    /// SVD-reduced recovery in `R^(N-M)`: factor `sqrt(N - M)`.
    Reduced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub t: usize,
    pub obs_dim: usize,
    pub epsilon: f64,
    pub omega: f64,
    pub dim_factor: f64,
}

impl GridSpec {
    pub fn cell_side(&self) -> f64 {
        1.0 / self.t as f64
    }

    /// `sqrt(M) / t`, the diameter of one cell.
    pub fn cell_diameter(&self) -> f64 {
        libm::sqrt(self.obs_dim as f64) / self.t as f64
    }

    /// Distance two same-cell observations may have for the recovery bound
    /// to close: `epsilon / (omega * (1 + dim_factor))`.
    pub fn diameter_budget(&self) -> f64 {
        self.epsilon / (self.omega * (1.0 + self.dim_factor))
    }

    /// `t^M`, saturating.
    pub fn cells_bound(&self) -> u128 {
        (self.t as u128)
            .checked_pow(self.obs_dim as u32)
            .unwrap_or(u128::MAX)
    }
}

pub fn grid_spec(n: usize, m: usize, omega: f64, epsilon: f64, mode: GridMode) -> Result<GridSpec> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter("epsilon must be positive"));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Parameter("omega must be positive"));
    }
    if m == 0 || m > n {
        return Err(Error::Shape {
            obs_dim: m,
            signal_dim: n,
        });
    }
    let dim_factor = match mode {
        GridMode::Full => libm::sqrt(n as f64),
        GridMode::Reduced if m == n => return Err(Error::NoNullSpace),
        GridMode::Reduced => libm::sqrt((n - m) as f64),
    };
    let raw = (1.0 + dim_factor) / epsilon * omega * libm::sqrt(m as f64);
    let t = libm::ceil(raw);
    if !(t.is_finite() && t < 1e15) {
        return Err(Error::Parameter("grid resolution is too large"));
    }
    Ok(GridSpec {
        t: (t as usize).max(1),
        obs_dim: m,
        epsilon,
        omega,
        dim_factor,
    })
}

/// Mixed-radix cell coordinates, one digit in `0..t` per observation axis.
pub type CellIndex = Vec<usize>;

pub fn cell_index(spec: &GridSpec, y: &[f64]) -> Result<CellIndex> {
    if y.len() != spec.obs_dim {
        return Err(Error::Dimension {
            expected: spec.obs_dim,
            found: y.len(),
        });
    }
    let t = spec.t;
    y.iter()
        .enumerate()
        .map(|(coordinate, &value)| {
            if !(-TOL_CERT..=1.0 + TOL_CERT).contains(&value) {
                return Err(Error::OutOfBox { coordinate, value });
            }
            let digit = libm::floor(value.clamp(0.0, 1.0) * t as f64) as usize;
            Ok(digit.min(t - 1))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    /// Position of the pair in the sample the cover was built from.
    pub index: usize,
    pub pair: LabeledPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCover {
    spec: GridSpec,
    representatives: BTreeMap<CellIndex, Representative>,
    /// Cell of every sample point, in sample order.
    assignment: Vec<CellIndex>,
}

impl GridCover {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn representatives(&self) -> &BTreeMap<CellIndex, Representative> {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// Cell of sample point `i`.
    pub fn cell_of(&self, i: usize) -> &CellIndex {
        &self.assignment[i]
    }

    /// Sample index of the representative sharing a cell with sample point `i`.
    pub fn representative_of(&self, i: usize) -> usize {
        self.representatives[&self.assignment[i]].index
    }

    /// Sample indices of the representatives, ascending.
    pub fn representative_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.representatives.values().map(|r| r.index).collect();
        idx.sort_unstable();
        idx
    }

    /// The representatives as a labeled set, in sample order.
    pub fn training_set(&self) -> Result<LabeledSet> {
        let mut reps: Vec<&Representative> = self.representatives.values().collect();
        reps.sort_by_key(|r| r.index);
        LabeledSet::with_tol_dup(reps.into_iter().map(|r| r.pair.clone()).collect(), 0.0)
    }
}

/// One representative per occupied cell: the first sample point, in input
/// order, whose observation falls in it.
pub fn build_cover(sample: &LabeledSet, spec: &GridSpec) -> Result<GridCover> {
    let points: Vec<&[f64]> = (0..sample.len()).map(|i| sample.observation(i)).collect();
    cover_from_points(sample, &points, spec)
}

/// Builds a cover where the cell of sample point `i` is read from
/// `points[i]` (already in the unit cube) rather than from its stored
/// observation.
pub(crate) fn cover_from_points(
    sample: &LabeledSet,
    points: &[&[f64]],
    spec: &GridSpec,
) -> Result<GridCover> {
    if sample.is_empty() {
        return Err(Error::DegenerateSet { size: 0 });
    }
    let mut representatives = BTreeMap::new();
    let mut assignment = Vec::with_capacity(sample.len());
    for (index, point) in points.iter().enumerate() {
        let cell = cell_index(spec, point)?;
        representatives
            .entry(cell.clone())
            .or_insert_with(|| Representative {
                index,
                pair: sample.pairs()[index].clone(),
            });
        assignment.push(cell);
    }
    Ok(GridCover {
        spec: spec.clone(),
        representatives,
        assignment,
    })
}

/// Outcome of recovering a whole sample from its cover.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub t: usize,
    pub cells_occupied: usize,
    pub cells_bound: u128,
    pub sample_size: usize,
    pub max_training_residual: f64,
    pub max_recovery_error: f64,
    pub epsilon: f64,
    /// Sample points whose recovery error exceeds `epsilon + TOL_CERT`.
    pub violations: usize,
}

impl RecoveryReport {
    pub fn passed(&self) -> bool {
        self.max_training_residual <= 1e-9
            && self.violations == 0
            && (self.cells_occupied as u128) <= self.cells_bound
    }
}

/// Cover, fit and recover: the full-dimensional pipeline on a sample whose
/// observations lie in `[0, 1]^M` and which is `omega`-Lipschitz.
pub fn recover_with_cover(
    sample: &LabeledSet,
    omega: f64,
    epsilon: f64,
) -> Result<(GridCover, MwetHypothesis, RecoveryReport)> {
    let cert = verify_lipschitz(sample, omega)?;
    if let Some(witness) = cert.witness {
        return Err(Error::NotLipschitz {
            witness,
            ratio: cert.max_ratio,
        });
    }
    let spec = grid_spec(
        sample.signal_dim(),
        sample.obs_dim(),
        omega,
        epsilon,
        GridMode::Full,
    )?;
    let cover = build_cover(sample, &spec)?;
    let hypothesis = MwetHypothesis::fit(cover.training_set()?, Some(omega))?;

    let mut buf = alloc::vec![0.0; sample.signal_dim()];
    let mut max_err = 0.0_f64;
    let mut violations = 0;
    for pair in sample.pairs() {
        hypothesis.evaluate_into(&pair.observation, &mut buf);
        let err = dist(&buf, &pair.signal);
        if err > epsilon + TOL_CERT {
            violations += 1;
        }
        max_err = max_err.max(err);
    }
    let report = RecoveryReport {
        t: spec.t,
        cells_occupied: cover.len(),
        cells_bound: spec.cells_bound(),
        sample_size: sample.len(),
        max_training_residual: hypothesis.max_training_residual(),
        max_recovery_error: max_err,
        epsilon,
        violations,
    };
    Ok((cover, hypothesis, report))
}
