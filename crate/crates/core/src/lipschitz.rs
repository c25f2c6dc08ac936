//! Lipschitz sets: a finite signal set is `(A^-1, omega)`-Lipschitz when
//! `||x1 - x2|| <= omega * ||A(x1) - A(x2)||` for every pair.
//!
//! All scans are exhaustive over unordered pairs `(i, j)`, `i < j`, visited in
//! lexicographic order; ties go to the first pair visited.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::labeled::LabeledSet;
use crate::operators::Operator;
use crate::tol::{TOL_CERT, TOL_INJ_REL};
use crate::vector::{check_dim, check_finite, dist, norm, ObservationVector, SignalVector};
use crate::LabeledPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Certified,
    Violated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCertificate {
    pub omega: f64,
    pub verdict: Verdict,
    /// Indices of the extremal pair: the maximizing pair for an exact
    /// constant, the worst violation otherwise.
    pub witness: Option<(usize, usize)>,
    /// Largest signal/observation distance ratio over distinct pairs.
    pub max_ratio: f64,
}

impl LipschitzCertificate {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }
}

/// Observation distances at or below this are treated as collisions.
pub fn injectivity_tolerance(set: &LabeledSet) -> f64 {
    let max_norm = (0..set.len())
        .map(|i| norm(set.observation(i)))
        .fold(0.0_f64, f64::max);
    TOL_INJ_REL * (1.0 + max_norm)
}

/// The exact constant of a finite, injectively observed set: the largest
/// ratio `||x1 - x2|| / ||A(x1) - A(x2)||` over distinct pairs.
pub fn exact_constant(set: &LabeledSet) -> Result<LipschitzCertificate> {
    if set.len() < 2 {
        return Err(Error::DegenerateSet { size: set.len() });
    }
    let tol_inj = injectivity_tolerance(set);
    let mut best = 0.0;
    let mut witness = (0, 1);
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let dx = dist(set.signal(i), set.signal(j));
            if dx == 0.0 {
                continue;
            }
            let dy = dist(set.observation(i), set.observation(j));
            if dy <= tol_inj {
                return Err(Error::NotInjective {
                    first: i,
                    second: j,
                });
            }
            let ratio = dx / dy;
            if ratio > best {
                best = ratio;
                witness = (i, j);
            }
        }
    }
    Ok(LipschitzCertificate {
        omega: best,
        verdict: Verdict::Certified,
        witness: Some(witness),
        max_ratio: best,
    })
}

/// Checks the Lipschitz inequality at `omega` for every pair, with absolute
/// slack [`TOL_CERT`]. Among violating pairs the witness has the largest
/// ratio.
pub fn verify_lipschitz(set: &LabeledSet, omega: f64) -> Result<LipschitzCertificate> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Parameter("omega must be positive and finite"));
    }
    let mut max_ratio = 0.0_f64;
    let mut worst: Option<((usize, usize), f64)> = None;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let dx = dist(set.signal(i), set.signal(j));
            if dx == 0.0 {
                continue;
            }
            let dy = dist(set.observation(i), set.observation(j));
            let ratio = if dy > 0.0 { dx / dy } else { f64::INFINITY };
            max_ratio = max_ratio.max(ratio);
            if dx > omega * dy + TOL_CERT && worst.is_none_or(|(_, r)| ratio > r) {
                worst = Some(((i, j), ratio));
            }
        }
    }
    Ok(LipschitzCertificate {
        omega,
        verdict: if worst.is_some() {
            Verdict::Violated
        } else {
            Verdict::Certified
        },
        witness: worst.map(|(pair, _)| pair),
        max_ratio,
    })
}

/// Scale-and-shift `x -> alpha * x + shift` of a signal set.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSetTransform {
    alpha: f64,
    shift: Vec<f64>,
}

impl AffineSetTransform {
    pub fn new(alpha: f64, shift: Vec<f64>) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Parameter("alpha must be finite"));
        }
        check_finite(&shift)?;
        Ok(Self { alpha, shift })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }
}

/// Applies `t` to every signal and relabels through the linear operator
/// `op`. The result keeps the Lipschitz constant of `set`.
pub fn affine_transform(
    set: &LabeledSet,
    op: &Operator,
    t: &AffineSetTransform,
) -> Result<LabeledSet> {
    let op = op.as_matrix().ok_or(Error::OperatorClass)?;
    if t.alpha == 0.0 {
        return Err(Error::DegenerateScale);
    }
    check_dim(set.signal_dim(), t.shift.len())?;
    let pairs = set
        .pairs()
        .iter()
        .map(|p| {
            let x: Vec<f64> = p
                .signal
                .iter()
                .zip(&t.shift)
                .map(|(v, s)| t.alpha * v + s)
                .collect();
            let y = op.apply(&x)?;
            Ok(LabeledPair::new(
                SignalVector::new(x)?,
                ObservationVector::new(y)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledSet::new(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub passed: bool,
    /// Smallest `2 eps + omega ||dy|| - ||dx||` over distinct pairs.
    pub min_slack: f64,
    pub worst_pair: (usize, usize),
}

/// Checks the necessary condition a set must meet when some
/// `hypothesis_omega`-Lipschitz map recovers it with error at most
/// `epsilon`: `||x1 - x2|| <= 2 epsilon + omega ||A(x1) - A(x2)||`.
pub fn perturbation_check(
    set: &LabeledSet,
    hypothesis_omega: f64,
    epsilon: f64,
) -> Result<PerturbationReport> {
    if set.len() < 2 {
        return Err(Error::DegenerateSet { size: set.len() });
    }
    if !(hypothesis_omega >= 0.0 && hypothesis_omega.is_finite()) {
        return Err(Error::Parameter("omega must be nonnegative and finite"));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter("epsilon must be nonnegative and finite"));
    }
    let mut min_slack = f64::INFINITY;
    let mut worst_pair = (0, 1);
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let dx = dist(set.signal(i), set.signal(j));
            let dy = dist(set.observation(i), set.observation(j));
            let slack = 2.0 * epsilon + hypothesis_omega * dy - dx;
            if slack < min_slack {
                min_slack = slack;
                worst_pair = (i, j);
            }
        }
    }
    Ok(PerturbationReport {
        passed: min_slack >= -TOL_CERT,
        min_slack,
        worst_pair,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::rng::{normal_vector, seeded};
    use alloc::vec;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn piecewise_set(xs: &[f64]) -> LabeledSet {
        let signals: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        LabeledSet::from_operator(&Operator::PiecewiseExample, &signals).unwrap()
    }

    fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect()
    }

    fn gappy_sample() -> Vec<f64> {
        let mut xs = grid(0.0, 0.5, 51);
        xs.push(1.5);
        xs.extend(grid(2.5, 3.0, 51));
        xs
    }

    #[test]
    fn property1_examples() {
        let cert = exact_constant(&piecewise_set(&[0.5, 2.5])).unwrap();
        assert_eq!(cert.omega, 2.0);
        assert_eq!(cert.witness, Some((0, 1)));

        let op = Operator::matrix(Matrix::identity(2)).unwrap();
        let set = LabeledSet::from_operator(&op, &[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(exact_constant(&set).unwrap().omega, 1.0);

        assert_eq!(
            exact_constant(&piecewise_set(&[1.0, 2.0])).unwrap_err(),
            Error::NotInjective {
                first: 0,
                second: 1
            }
        );
        assert_eq!(
            exact_constant(&piecewise_set(&[1.0])).unwrap_err(),
            Error::DegenerateSet { size: 1 }
        );
    }

    #[test]
    fn verify_examples() {
        assert!(verify_lipschitz(&piecewise_set(&[2.2]), 1e-3)
            .unwrap()
            .is_certified());
        assert!(verify_lipschitz(&piecewise_set(&grid(0.0, 1.0, 201)), 1.0)
            .unwrap()
            .is_certified());

        let xs = gappy_sample();
        let set = piecewise_set(&xs);
        assert!(verify_lipschitz(&set, 2.0).unwrap().is_certified());

        let cert = verify_lipschitz(&set, 1.5).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        let (i, j) = cert.witness.unwrap();
        let mut pair = [xs[i], xs[j]];
        pair.sort_by(f64::total_cmp);
        assert!(pair == [0.5, 1.5] || pair == [1.5, 2.5], "{pair:?}");
        assert_eq!(cert.max_ratio, 2.0);
    }

    #[test]
    fn collision_pair_is_a_violation_not_an_error() {
        let cert = verify_lipschitz(&piecewise_set(&[1.0, 2.0]), 10.0).unwrap();
        assert_eq!(cert.verdict, Verdict::Violated);
        assert_eq!(cert.witness, Some((0, 1)));
        assert!(cert.max_ratio.is_infinite());
    }

    fn random_instance(seed: u64) -> (Operator, LabeledSet) {
        let mut rng = seeded(seed);
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=n);
        let a = Matrix::new(m, n, normal_vector(&mut rng, m * n)).unwrap();
        let op = Operator::matrix(a).unwrap();
        let count = rng.random_range(2..=64);
        let signals: Vec<Vec<f64>> = (0..count).map(|_| normal_vector(&mut rng, n)).collect();
        let set = LabeledSet::from_operator(&op, &signals).unwrap();
        (op, set)
    }

    #[test]
    fn property1_constant_is_tight() {
        for seed in 0..100 {
            let (_, set) = random_instance(seed);
            let omega = exact_constant(&set).unwrap().omega;
            assert!(verify_lipschitz(&set, omega).unwrap().is_certified());
            assert_eq!(
                verify_lipschitz(&set, omega * (1.0 - 1e-6))
                    .unwrap()
                    .verdict,
                Verdict::Violated,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn certificates_ignore_ordering() {
        let mut rng = seeded(99);
        for seed in 0..20 {
            let (_, set) = random_instance(seed);
            let mut pairs = set.pairs().to_vec();
            pairs.shuffle(&mut rng);
            let shuffled = LabeledSet::new(pairs).unwrap();
            let a = exact_constant(&set).unwrap();
            let b = exact_constant(&shuffled).unwrap();
            assert_eq!(a.omega, b.omega);
            let omega = 0.9 * a.omega;
            assert_eq!(
                verify_lipschitz(&set, omega).unwrap().verdict,
                verify_lipschitz(&shuffled, omega).unwrap().verdict
            );
        }
    }

    #[test]
    fn affine_transform_examples_and_invariance() {
        let (op, set) = random_instance(5);
        let n = set.signal_dim();
        let same = affine_transform(
            &set,
            &op,
            &AffineSetTransform::new(1.0, vec![0.0; n]).unwrap(),
        )
        .unwrap();
        assert_eq!(same, set);

        let base = exact_constant(&set).unwrap().omega;
        let mut rng = seeded(6);
        for alpha in [2.0, -0.3, 1.0] {
            let shift = normal_vector(&mut rng, n);
            let t = AffineSetTransform::new(alpha, shift).unwrap();
            let moved = exact_constant(&affine_transform(&set, &op, &t).unwrap())
                .unwrap()
                .omega;
            assert!((moved - base).abs() <= 1e-9 * base);
        }
    }

    #[test]
    fn affine_transform_errors() {
        let (op, set) = random_instance(8);
        let n = set.signal_dim();
        assert_eq!(
            affine_transform(
                &set,
                &op,
                &AffineSetTransform::new(0.0, vec![0.0; n]).unwrap()
            )
            .unwrap_err(),
            Error::DegenerateScale
        );
        let set1 = piecewise_set(&[0.1, 0.2]);
        assert_eq!(
            affine_transform(
                &set1,
                &Operator::PiecewiseExample,
                &AffineSetTransform::new(1.0, vec![0.0]).unwrap()
            )
            .unwrap_err(),
            Error::OperatorClass
        );
    }

    #[test]
    fn corollary1_examples() {
        for seed in 0..50 {
            let (_, set) = random_instance(seed);
            let cert = exact_constant(&set).unwrap();
            assert!(perturbation_check(&set, cert.omega, 0.0).unwrap().passed);

            let half = perturbation_check(&set, 0.5 * cert.omega, 0.0).unwrap();
            assert!(!half.passed, "seed {seed}");
            // The maximizing pair of the exact constant violates the halved bound.
            let (i, j) = cert.witness.unwrap();
            let dx = dist(set.signal(i), set.signal(j));
            let dy = dist(set.observation(i), set.observation(j));
            assert!(half.min_slack <= 0.5 * cert.omega * dy - dx);
            assert!(0.5 * cert.omega * dy - dx < 0.0);
        }
    }
}
