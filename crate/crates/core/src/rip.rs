//! Exact restricted isometry constants by exhaustive subset enumeration, and
//! the Lipschitz constant they imply for sparse signals.
//!
//! `delta_S` is the smallest `delta` with
//! `(1 - delta) ||c||^2 <= ||A_T c||^2 <= (1 + delta) ||c||^2` for every
//! column subset `|T| <= S`. For one subset it is the larger of
//! `1 - lambda_min` and `lambda_max - 1` over the spectrum of `A_T^T A_T`.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::operators::MatrixOperator;
use crate::rng::{seeded, standard_normal};
use crate::tol::{ENUMERATION_CAP, TOL_CERT};
use crate::vector::{dist, norm};

#[derive(Debug, Clone, PartialEq)]
pub struct RipReport {
    pub s: usize,
    pub delta: f64,
    pub subsets_examined: u128,
    /// First subset, in enumeration order, attaining `delta`.
    pub extremal_subset: Vec<usize>,
}

/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of nonempty subsets of size at most `s` drawn from `n` columns.
pub fn subsets_up_to(n: usize, s: usize) -> u128 {
    (1..=s).fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

/// Calls `f` on every `k`-subset of `0..n` in colexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    try_for_each_subset(n, k, |c| {
        f(c);
        ControlFlow::Continue(())
    });
}

/// [`for_each_subset`] that stops when `f` breaks; returns whether it did.
pub fn try_for_each_subset(
    n: usize,
    k: usize,
    mut f: impl FnMut(&[usize]) -> ControlFlow<()>,
) -> bool {
    if k == 0 || k > n {
        return false;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        if f(&c).is_break() {
            return true;
        }
        let mut i = 0;
        while i < k {
            let limit = if i + 1 < k { c[i + 1] } else { n };
            if c[i] + 1 < limit {
                break;
            }
            i += 1;
        }
        if i == k {
            return false;
        }
        c[i] += 1;
        for (j, v) in c.iter_mut().enumerate().take(i) {
            *v = j;
        }
    }
}

/// Isometry defect of one column subset.
pub fn subset_distortion(a: &Matrix, subset: &[usize]) -> f64 {
    let (values, _) = symmetric_eigen(&a.select_columns(subset).gram());
    let lo = values[0];
    let hi = values[values.len() - 1];
    (1.0 - lo).max(hi - 1.0).max(0.0)
}

pub fn rip_delta(a: &MatrixOperator, s: usize) -> Result<RipReport> {
    rip_delta_with_cap(a, s, ENUMERATION_CAP)
}

pub fn rip_delta_with_cap(a: &MatrixOperator, s: usize, cap: u128) -> Result<RipReport> {
    let (m, n) = (a.obs_dim(), a.signal_dim());
    if s == 0 || s > m.min(n) {
        return Err(Error::Parameter(
            "sparsity must satisfy 1 <= S <= min(M, N)",
        ));
    }
    let total = subsets_up_to(n, s);
    if total > cap {
        return Err(Error::TooLarge {
            subsets: total,
            cap,
        });
    }
    let matrix = a.matrix();
    let mut delta = -1.0;
    let mut extremal = Vec::new();
    for k in 1..=s {
        for_each_subset(n, k, |subset| {
            let d = subset_distortion(matrix, subset);
            if d > delta {
                delta = d;
                extremal = subset.to_vec();
            }
        });
    }
    Ok(RipReport {
        s,
        delta,
        subsets_examined: total,
        extremal_subset: extremal,
    })
}

/// Like [`rip_delta`], but gives up with `Ok(None)` as soon as one subset
/// has distortion at least `bound`, so `delta_S >= bound`.
pub fn rip_delta_below(a: &MatrixOperator, s: usize, bound: f64) -> Result<Option<RipReport>> {
    let (m, n) = (a.obs_dim(), a.signal_dim());
    if s == 0 || s > m.min(n) {
        return Err(Error::Parameter(
            "sparsity must satisfy 1 <= S <= min(M, N)",
        ));
    }
    let total = subsets_up_to(n, s);
    if total > ENUMERATION_CAP {
        return Err(Error::TooLarge {
            subsets: total,
            cap: ENUMERATION_CAP,
        });
    }
    let matrix = a.matrix();
    let mut delta = -1.0;
    let mut extremal = Vec::new();
    for k in 1..=s {
        let exceeded = try_for_each_subset(n, k, |subset| {
            let d = subset_distortion(matrix, subset);
            if d >= bound {
                return ControlFlow::Break(());
            }
            if d > delta {
                delta = d;
                extremal = subset.to_vec();
            }
            ControlFlow::Continue(())
        });
        if exceeded {
            return Ok(None);
        }
    }
    Ok(Some(RipReport {
        s,
        delta,
        subsets_examined: total,
        extremal_subset: extremal,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverabilityReport {
    pub passed: bool,
    pub delta_2s: f64,
    pub delta_3s: f64,
}

/// Whether `delta_2S + delta_3S < 1`.
pub fn check_recoverability_condition(
    a: &MatrixOperator,
    s: usize,
) -> Result<RecoverabilityReport> {
    if s == 0 || 3 * s > a.signal_dim() {
        return Err(Error::Parameter("sparsity must satisfy 1 <= 3S <= N"));
    }
    let delta_2s = rip_delta(a, 2 * s)?.delta;
    let delta_3s = rip_delta(a, 3 * s)?.delta;
    Ok(RecoverabilityReport {
        passed: delta_2s + delta_3s < 1.0,
        delta_2s,
        delta_3s,
    })
}

/// `1 / sqrt(1 - delta_2S)`: the Lipschitz constant of `S`-sparse signals.
pub fn rip_to_omega(delta_2s: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta_2s) {
        return Err(Error::NotApplicable { delta: delta_2s });
    }
    Ok(1.0 / libm::sqrt(1.0 - delta_2s))
}

/// Random `s`-sparse vector: uniform support, standard normal values.
pub fn random_sparse<R: Rng + ?Sized>(rng: &mut R, n: usize, s: usize) -> Vec<f64> {
    let mut x = alloc::vec![0.0; n];
    for i in sample_indices(rng, n, s) {
        x[i] = standard_normal(rng);
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseLipschitzReport {
    pub passed: bool,
    pub delta_2s: f64,
    pub omega: f64,
    pub max_ratio: f64,
    pub pairs: usize,
}

/// Draws `num_pairs` pairs of `s`-sparse signals and checks
/// `||x1 - x2|| <= omega ||A x1 - A x2||` with `omega` from `delta_2S`.
pub fn verify_sparse_lipschitz(
    a: &MatrixOperator,
    s: usize,
    num_pairs: usize,
    seed: u64,
) -> Result<SparseLipschitzReport> {
    if s == 0 || 2 * s > a.obs_dim().min(a.signal_dim()) {
        return Err(Error::Parameter(
            "sparsity must satisfy 1 <= 2S <= min(M, N)",
        ));
    }
    let delta_2s = rip_delta(a, 2 * s)?.delta;
    let omega = rip_to_omega(delta_2s)?;
    let matrix = a.matrix();
    let n = a.signal_dim();
    let mut rng = seeded(seed);
    let mut passed = true;
    let mut max_ratio = 0.0_f64;
    for _ in 0..num_pairs {
        let x1 = random_sparse(&mut rng, n, s);
        let x2 = random_sparse(&mut rng, n, s);
        let dx = dist(&x1, &x2);
        let dy = dist(&matrix.apply(&x1), &matrix.apply(&x2));
        if dx > omega * dy + TOL_CERT {
            passed = false;
        }
        if dx > 0.0 {
            max_ratio = max_ratio.max(if dy > 0.0 { dx / dy } else { f64::INFINITY });
        }
    }
    Ok(SparseLipschitzReport {
        passed,
        delta_2s,
        omega,
        max_ratio,
        pairs: num_pairs,
    })
}

/// Rescales every column of `a` to unit norm; zero columns are left alone.
pub fn normalize_columns(a: &Matrix) -> Matrix {
    let mut out = a.clone();
    for c in 0..a.cols() {
        let n = norm(&a.column(c));
        if n > 0.0 {
            for r in 0..a.rows() {
                out.set(r, c, a.get(r, c) / n);
            }
        }
    }
    out
}
