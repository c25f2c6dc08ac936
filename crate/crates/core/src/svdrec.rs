//! SVD-reduced recovery for linear operators.
//!
//! With `A = U [Sigma 0] V^T`, `V = [V1 V2]` and `Psi = Sigma^-1 U^T`, every
//! signal satisfies `x = V [Psi A x ; V2^T x]`. The observation fixes the
//! first block exactly, so only the `(N - M)`-dimensional coordinate
//! `V2^T x` has to be learned. The recovery map is
//! `R(y) = V [Psi y ; G(y)]` where `G` is a McShane-Whitney extension fitted
//! on `(A x^j, V2^T x^j)` for the grid-cover representatives `x^j`. Any
//! output of `R` reproduces the observation: `A R(y) = y`.
//!
//! A rank-deficient operator is first reduced to its numerical rank `r` by
//! projecting observations onto the leading `r` left singular vectors; the
//! factors then describe the `r x N` reduced operator, whose left factor is
//! the identity.

use alloc::vec::Vec;

use crate::covering::{cover_from_points, grid_spec, GridCover, GridMode};
use crate::error::{Error, Result};
use crate::labeled::{LabeledPair, LabeledSet};
use crate::linalg::{orthonormal_complement, wide_svd, Matrix};
use crate::lipschitz::verify_lipschitz;
use crate::mwet::MwetHypothesis;
use crate::operators::{bounding_shift_scale, MatrixOperator};
use crate::rng::{normal_vector, seeded};
use crate::tol::{RANK_TOL, TOL_CERT};
use crate::vector::{check_dim, dist, norm, ObservationVector, SignalVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    operator: Matrix,
    u: Matrix,
    sigma: Vec<f64>,
    v1: Matrix,
    v2: Matrix,
    psi: Matrix,
    projection: Option<Matrix>,
}

impl SvdFactors {
    /// The effective `r x N` operator the factors decompose.
    pub fn operator(&self) -> &Matrix {
        &self.operator
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v1(&self) -> &Matrix {
        &self.v1
    }

    pub fn v2(&self) -> &Matrix {
        &self.v2
    }

    pub fn psi(&self) -> &Matrix {
        &self.psi
    }

    /// `r x M` map from original observations to reduced ones, present only
    /// after rank reduction.
    pub fn projection(&self) -> Option<&Matrix> {
        self.projection.as_ref()
    }

    /// Reassembles factors from their parts, checking that the shapes agree:
    /// `operator` is `r x N`, `u` is `r x r`, `sigma` has `r` entries, `v1`
    /// is `N x r`, `v2` is `N x (N - r)`, `psi` is `r x r` and `projection`,
    /// when present, is `r x M`.
    pub fn from_parts(
        operator: Matrix,
        u: Matrix,
        sigma: Vec<f64>,
        v1: Matrix,
        v2: Matrix,
        psi: Matrix,
        projection: Option<Matrix>,
    ) -> Result<Self> {
        let (r, n) = (operator.rows(), operator.cols());
        let shape = |m: &Matrix, rows: usize, cols: usize| {
            if m.rows() == rows && m.cols() == cols {
                Ok(())
            } else {
                Err(Error::Dimension {
                    expected: rows * cols,
                    found: m.rows() * m.cols(),
                })
            }
        };
        if r > n {
            return Err(Error::Shape {
                obs_dim: r,
                signal_dim: n,
            });
        }
        check_dim(r, sigma.len())?;
        shape(&u, r, r)?;
        shape(&v1, n, r)?;
        shape(&v2, n, n - r)?;
        shape(&psi, r, r)?;
        if let Some(p) = &projection {
            check_dim(r, p.rows())?;
        }
        Ok(Self {
            operator,
            u,
            sigma,
            v1,
            v2,
            psi,
            projection,
        })
    }

    pub fn is_reduced(&self) -> bool {
        self.projection.is_some()
    }

    pub fn signal_dim(&self) -> usize {
        self.operator.cols()
    }

    /// Numerical rank `r`.
    pub fn effective_obs_dim(&self) -> usize {
        self.operator.rows()
    }

    pub fn original_obs_dim(&self) -> usize {
        self.projection
            .as_ref()
            .map_or(self.operator.rows(), Matrix::cols)
    }

    /// `[V1 V2]`.
    pub fn v(&self) -> Matrix {
        self.v1
            .hstack(&self.v2)
            .expect("V1 and V2 share a row count")
    }

    /// `||A - U [Sigma 0] V^T||_F / ||A||_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let usv = self
            .u
            .matmul(&Matrix::diagonal(&self.sigma))
            .and_then(|us| us.matmul(&self.v1.transpose()))
            .expect("factor shapes agree");
        usv.sub(&self.operator)
            .map_or(f64::INFINITY, |d| d.frobenius_norm())
            / self.operator.frobenius_norm()
    }

    /// Larger of `||U^T U - I||_F` and `||V^T V - I||_F`.
    pub fn orthogonality_error(&self) -> f64 {
        self.u
            .orthonormality_error()
            .max(self.v().orthonormality_error())
    }

    /// Maps an original observation to the effective observation space.
    pub fn project_observation(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.original_obs_dim(), y.len())?;
        Ok(match &self.projection {
            Some(p) => p.apply(y),
            None => y.to_vec(),
        })
    }

    /// `V [top ; bottom]`.
    fn assemble(&self, top: &[f64], bottom: &[f64]) -> Vec<f64> {
        let mut x = self.v1.apply(top);
        if !bottom.is_empty() {
            for (xi, b) in x.iter_mut().zip(self.v2.apply(bottom)) {
                *xi += b;
            }
        }
        x
    }
}

/// Factors `A` as `U [Sigma 0] V^T`, reducing to the numerical rank when
/// some singular value is at most `rank_tol * sigma_max`.
pub fn svd_factor(a: &MatrixOperator, rank_tol: f64) -> Result<SvdFactors> {
    let matrix = a.matrix();
    let svd = wide_svd(matrix);
    let sigma_max = svd.sigma[0];
    if sigma_max == 0.0 {
        return Err(Error::RankZero);
    }
    let rank = svd
        .sigma
        .iter()
        .filter(|&&s| s > rank_tol * sigma_max)
        .count();
    let keep: Vec<usize> = (0..rank).collect();
    let (operator, u, projection) = if rank == matrix.rows() {
        (matrix.clone(), svd.u, None)
    } else {
        let p = svd.u.select_columns(&keep).transpose();
        let reduced = p.matmul(matrix)?;
        (reduced, Matrix::identity(rank), Some(p))
    };
    let sigma = svd.sigma[..rank].to_vec();
    let v1 = svd.v1.select_columns(&keep);
    let v2 = orthonormal_complement(&v1);
    let inv: Vec<f64> = sigma.iter().map(|s| 1.0 / s).collect();
    let psi = Matrix::diagonal(&inv).matmul(&u.transpose())?;
    Ok(SvdFactors {
        operator,
        u,
        sigma,
        v1,
        v2,
        psi,
        projection,
    })
}

/// `||V [Psi A x ; V2^T x] - x||`, zero up to rounding for every `x`.
pub fn identity_check(f: &SvdFactors, x: &[f64]) -> Result<f64> {
    check_dim(f.signal_dim(), x.len())?;
    let top = f.psi.apply(&f.operator.apply(x));
    let bottom = f.v2.apply_transpose(x);
    Ok(dist(&f.assemble(&top, &bottom), x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdRecoveryMap {
    factors: SvdFactors,
    reduced: Option<MwetHypothesis>,
}

impl SvdRecoveryMap {
    /// Pairs factors with a null-space hypothesis. The hypothesis must map
    /// effective observations to `N - r` coordinates, and is required
    /// exactly when `r < N`.
    pub fn from_parts(factors: SvdFactors, reduced: Option<MwetHypothesis>) -> Result<Self> {
        let (n, r) = (factors.signal_dim(), factors.effective_obs_dim());
        match &reduced {
            None if r < n => {
                return Err(Error::Parameter(
                    "reduced operator needs a null-space hypothesis",
                ))
            }
            Some(_) if r == n => {
                return Err(Error::Parameter(
                    "square operator takes no null-space hypothesis",
                ))
            }
            Some(h) => {
                check_dim(r, h.input_dim())?;
                check_dim(n - r, h.output_dim())?;
            }
            None => {}
        }
        Ok(Self { factors, reduced })
    }

    pub fn factors(&self) -> &SvdFactors {
        &self.factors
    }

    /// The learned null-space hypothesis; `None` when the operator is
    /// square and invertible.
    pub fn reduced(&self) -> Option<&MwetHypothesis> {
        self.reduced.as_ref()
    }

    /// `R(y) = V [Psi y ; G(y)]` for an effective observation `y`.
    pub fn recover(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.factors.effective_obs_dim(), y.len())?;
        let top = self.factors.psi.apply(y);
        let bottom = match &self.reduced {
            Some(h) => h.evaluate(y)?,
            None => Vec::new(),
        };
        Ok(self.factors.assemble(&top, &bottom))
    }

    /// Projects an original observation when the operator was rank-reduced,
    /// then recovers.
    pub fn recover_observation(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.recover(&self.factors.project_observation(y)?)
    }
}

/// Covers the sample's observations with the reduced-dimension grid and fits
/// the null-space hypothesis on the representatives.
///
/// Observations need not lie in the unit cube: cells are assigned after
/// shifting and scaling the sample's effective observations into it, and the
/// grid constant is scaled to match. For `M = N` no hypothesis is fitted and
/// recovery is exact inversion.
pub fn fit_reduced(
    sample: &LabeledSet,
    a: &MatrixOperator,
    omega: f64,
    epsilon: f64,
) -> Result<(SvdRecoveryMap, Option<GridCover>)> {
    check_dim(a.signal_dim(), sample.signal_dim())?;
    check_dim(a.obs_dim(), sample.obs_dim())?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter("epsilon must be positive"));
    }
    let cert = verify_lipschitz(sample, omega)?;
    if let Some(witness) = cert.witness {
        return Err(Error::NotLipschitz {
            witness,
            ratio: cert.max_ratio,
        });
    }
    let factors = svd_factor(a, RANK_TOL)?;
    let (n, r) = (factors.signal_dim(), factors.effective_obs_dim());
    if r == n {
        return Ok((
            SvdRecoveryMap {
                factors,
                reduced: None,
            },
            None,
        ));
    }

    let effective: Vec<Vec<f64>> = (0..sample.len())
        .map(|i| factors.project_observation(sample.observation(i)))
        .collect::<Result<_>>()?;
    let (shift, scale) = bounding_shift_scale(&effective);
    let unit: Vec<Vec<f64>> = effective
        .iter()
        .map(|y| y.iter().zip(&shift).map(|(v, b)| (v - b) / scale).collect())
        .collect();
    let unit_refs: Vec<&[f64]> = unit.iter().map(Vec::as_slice).collect();
    let spec = grid_spec(n, r, omega * scale, epsilon, GridMode::Reduced)?;
    let cover = cover_from_points(sample, &unit_refs, &spec)?;

    let training = cover
        .representative_indices()
        .into_iter()
        .map(|i| {
            let target = factors.v2.apply_transpose(sample.signal(i));
            Ok(LabeledPair::new(
                SignalVector::new(target)?,
                ObservationVector::new(effective[i].clone())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let hypothesis = MwetHypothesis::fit(LabeledSet::with_tol_dup(training, 0.0)?, Some(omega))?;
    Ok((
        SvdRecoveryMap {
            factors,
            reduced: Some(hypothesis),
        },
        Some(cover),
    ))
}

/// Measured guarantees of a fitted reduced recovery map.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedReport {
    /// Grid resolution; zero when no cover was needed.
    pub t: usize,
    pub cells_occupied: usize,
    pub cells_bound: u128,
    pub effective_rank: usize,
    pub rank_reduced: bool,
    pub output_dim: usize,
    pub sample_size: usize,
    /// Largest `||R(A x^j) - x^j||` over the representatives.
    pub max_training_residual: f64,
    /// Largest `||R(A x) - x||` over the sample.
    pub max_recovery_error: f64,
    pub epsilon: f64,
    pub violations: usize,
    /// Largest `||A R(A x) - A x|| / (1 + ||A x||)` over random probes.
    pub max_consistency_residual: f64,
    /// Largest `| ||R(A x) - x|| - ||G(A x) - V2^T x|| |` over the sample.
    pub max_decomposition_gap: f64,
    /// Largest violation of `||V2^T dx|| <= omega ||A dx||` over sample
    /// pairs (nonpositive when the transfer holds).
    pub max_transfer_excess: f64,
}

impl ReducedReport {
    pub fn passed(&self) -> bool {
        self.max_training_residual <= 1e-9
            && self.violations == 0
            && self.max_consistency_residual <= 1e-8
            && (self.t == 0 || self.cells_occupied as u128 <= self.cells_bound)
    }
}

/// Measures every guarantee of `map` on `sample`, drawing `probes` standard
/// normal signals from all of `R^N` for the observation-consistency check.
pub fn reduced_report(
    map: &SvdRecoveryMap,
    cover: Option<&GridCover>,
    sample: &LabeledSet,
    omega: f64,
    epsilon: f64,
    probes: usize,
    seed: u64,
) -> Result<ReducedReport> {
    let f = &map.factors;
    check_dim(f.signal_dim(), sample.signal_dim())?;
    check_dim(f.original_obs_dim(), sample.obs_dim())?;

    let recovered = |i: usize| map.recover_observation(sample.observation(i));

    let max_training_residual = match cover {
        Some(c) => c
            .representative_indices()
            .into_iter()
            .map(|i| Ok(dist(&recovered(i)?, sample.signal(i))))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max),
        None => 0.0,
    };

    let mut max_recovery_error = 0.0_f64;
    let mut max_decomposition_gap = 0.0_f64;
    let mut violations = 0;
    for i in 0..sample.len() {
        let x = sample.signal(i);
        let y = f.project_observation(sample.observation(i))?;
        let rx = map.recover(&y)?;
        let err = dist(&rx, x);
        if err > epsilon + TOL_CERT {
            violations += 1;
        }
        max_recovery_error = max_recovery_error.max(err);
        let null_err = match &map.reduced {
            Some(h) => dist(&h.evaluate(&y)?, &f.v2.apply_transpose(x)),
            None => 0.0,
        };
        max_decomposition_gap = max_decomposition_gap.max((err - null_err).abs());
    }

    let mut max_transfer_excess = f64::NEG_INFINITY;
    for i in 0..sample.len() {
        let ti = f.v2.apply_transpose(sample.signal(i));
        for j in i + 1..sample.len() {
            let tj = f.v2.apply_transpose(sample.signal(j));
            let lhs = dist(&ti, &tj);
            let rhs = omega * dist(sample.observation(i), sample.observation(j));
            max_transfer_excess = max_transfer_excess.max(lhs - rhs);
        }
    }
    if sample.len() < 2 {
        max_transfer_excess = 0.0;
    }

    let mut rng = seeded(seed);
    let mut max_consistency_residual = 0.0_f64;
    for _ in 0..probes {
        let x = normal_vector(&mut rng, f.signal_dim());
        let ax = f.operator.apply(&x);
        let back = f.operator.apply(&map.recover(&ax)?);
        max_consistency_residual =
            max_consistency_residual.max(dist(&back, &ax) / (1.0 + norm(&ax)));
    }

    Ok(ReducedReport {
        t: cover.map_or(0, |c| c.spec().t),
        cells_occupied: cover.map_or(0, GridCover::len),
        cells_bound: cover.map_or(0, |c| c.spec().cells_bound()),
        effective_rank: f.effective_obs_dim(),
        rank_reduced: f.is_reduced(),
        output_dim: map.reduced.as_ref().map_or(0, MwetHypothesis::output_dim),
        sample_size: sample.len(),
        max_training_residual,
        max_recovery_error,
        epsilon,
        violations,
        max_consistency_residual,
        max_decomposition_gap,
        max_transfer_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipschitz::exact_constant;
    use crate::operators::Operator;
    use alloc::vec;
    use rand::Rng;

    fn gaussian(seed: u64, m: usize, n: usize) -> MatrixOperator {
        let mut rng = seeded(seed);
        MatrixOperator::new(Matrix::new(m, n, normal_vector(&mut rng, m * n)).unwrap()).unwrap()
    }

    #[test]
    fn already_factored_operator() {
        let mut data = vec![0.0; 2 * 4];
        data[0] = 1.0;
        data[4 + 1] = 1.0;
        let a = MatrixOperator::new(Matrix::new(2, 4, data).unwrap()).unwrap();
        let f = svd_factor(&a, RANK_TOL).unwrap();
        assert_eq!(f.sigma(), &[1.0, 1.0]);
        assert!(f.orthogonality_error() < 1e-12);
        assert!(f.reconstruction_error() < 1e-12);
        assert!(f.psi().sub(&f.u().transpose()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn scalar_operator() {
        let a = MatrixOperator::new(Matrix::new(1, 1, vec![2.0]).unwrap()).unwrap();
        let f = svd_factor(&a, RANK_TOL).unwrap();
        assert!((f.psi().get(0, 0).abs() - 0.5).abs() < 1e-15);
        let psi_a = f
            .psi()
            .matmul(a.matrix())
            .unwrap()
            .matmul(&f.v1().transpose())
            .unwrap();
        assert!((psi_a.get(0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(f.v2().cols(), 0);
    }

    #[test]
    fn random_factors_satisfy_invariants() {
        for seed in 0..20 {
            let f = svd_factor(&gaussian(seed, 3, 5), 1e-10).unwrap();
            assert!(f.orthogonality_error() < 1e-9);
            assert!(f.reconstruction_error() < 1e-9);
            assert!(f.sigma().windows(2).all(|w| w[0] >= w[1]));
            assert!(!f.is_reduced());
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let a = MatrixOperator::new(Matrix::zeros(2, 3)).unwrap();
        assert_eq!(svd_factor(&a, RANK_TOL).unwrap_err(), Error::RankZero);
    }

    #[test]
    fn rank_deficient_operator_is_reduced() {
        // Third row is the sum of the first two.
        let rows = vec![
            vec![1.0, 2.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, -1.0],
            vec![1.0, 3.0, 1.0, 0.0],
        ];
        let a = MatrixOperator::new(Matrix::from_rows(&rows).unwrap()).unwrap();
        let f = svd_factor(&a, RANK_TOL).unwrap();
        assert!(f.is_reduced());
        assert_eq!((f.effective_obs_dim(), f.original_obs_dim()), (2, 3));
        assert_eq!(f.v2().cols(), 2);
        assert!(f.orthogonality_error() < 1e-9);
        assert!(f.reconstruction_error() < 1e-9);
        let mut rng = seeded(1);
        for _ in 0..50 {
            let x = normal_vector(&mut rng, 4);
            assert!(identity_check(&f, &x).unwrap() < 1e-8 * (1.0 + norm(&x)));
        }
    }

    #[test]
    fn identity_check_examples() {
        let f = svd_factor(&gaussian(3, 4, 7), RANK_TOL).unwrap();
        assert_eq!(identity_check(&f, &[0.0; 7]).unwrap(), 0.0);
        let mut rng = seeded(4);
        for _ in 0..100 {
            let x = normal_vector(&mut rng, 7);
            assert!(identity_check(&f, &x).unwrap() <= 1e-8 * (1.0 + norm(&x)));
        }
        let id = svd_factor(&MatrixOperator::new(Matrix::identity(3)).unwrap(), RANK_TOL).unwrap();
        assert!(identity_check(&id, &[1.0, -2.0, 3.0]).unwrap() < 1e-14);
    }

    fn segment(a: &MatrixOperator, origin: &[f64], dir: &[f64], count: usize) -> LabeledSet {
        let signals: Vec<Vec<f64>> = (0..count)
            .map(|k| {
                let u = k as f64 / (count - 1) as f64;
                origin.iter().zip(dir).map(|(o, d)| o + u * d).collect()
            })
            .collect();
        LabeledSet::from_operator(&Operator::Matrix(a.clone()), &signals).unwrap()
    }

    #[test]
    fn square_operator_inverts_exactly() {
        let a = gaussian(12, 3, 3);
        let sample = segment(&a, &[0.1, 0.2, 0.3], &[1.0, -1.0, 0.5], 50);
        let omega = exact_constant(&sample).unwrap().omega;
        let (map, cover) = fit_reduced(&sample, &a, omega, 0.1).unwrap();
        assert!(cover.is_none() && map.reduced().is_none());
        let report = reduced_report(&map, None, &sample, omega, 0.1, 100, 0).unwrap();
        assert!(report.max_recovery_error <= 1e-8);
        assert!(report.passed());
    }

    #[test]
    fn slanted_segment_in_the_plane() {
        let a = MatrixOperator::new(Matrix::new(1, 2, vec![1.0, 0.0]).unwrap()).unwrap();
        let sample = segment(&a, &[0.0, 0.0], &[1.0, 0.5], 101);
        let omega = exact_constant(&sample).unwrap().omega;
        let (map, cover) = fit_reduced(&sample, &a, omega, 0.1).unwrap();
        let v2 = map.factors().v2().column(0);
        assert!(v2[0].abs() < 1e-12 && (v2[1].abs() - 1.0).abs() < 1e-12);
        let h = map.reduced().unwrap();
        assert_eq!(h.output_dim(), 1);
        for rep in cover.as_ref().unwrap().representatives().values() {
            let u = rep.pair.signal[0];
            let target = h.evaluate(&rep.pair.observation).unwrap()[0];
            assert!((target.abs() - 0.5 * u).abs() < 1e-12);
        }
        let report = reduced_report(&map, cover.as_ref(), &sample, omega, 0.1, 200, 1).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn reduced_grid_is_no_finer_than_full_grid() {
        let mut rng = seeded(40);
        for _ in 0..200 {
            let n = rng.random_range(2..=9);
            let m = rng.random_range(1..n);
            let (w, e) = (rng.random_range(0.1..5.0), rng.random_range(0.01..1.0));
            let t1 = grid_spec(n, m, w, e, GridMode::Full).unwrap().t;
            let t3 = grid_spec(n, m, w, e, GridMode::Reduced).unwrap().t;
            assert!(t3 <= t1);
        }
    }

    #[test]
    fn random_instances_meet_all_guarantees() {
        for seed in 0..10 {
            let mut rng = seeded(100 + seed);
            let n = rng.random_range(2..=6);
            let m = rng.random_range(1..n);
            let a = gaussian(200 + seed, m, n);
            let (o, d) = (normal_vector(&mut rng, n), normal_vector(&mut rng, n));
            let sample = segment(&a, &o, &d, 120);
            let omega = exact_constant(&sample).unwrap().omega;
            let (map, cover) = fit_reduced(&sample, &a, omega, 0.2).unwrap();
            assert_eq!(map.reduced().unwrap().output_dim(), n - m);
            let report =
                reduced_report(&map, cover.as_ref(), &sample, omega, 0.2, 1000, seed).unwrap();
            assert!(report.passed(), "seed {seed}: {report:?}");
            assert!(report.max_decomposition_gap <= 1e-9);
            assert!(report.max_transfer_excess <= 1e-9);
        }
    }
}
