//! McShane-Whitney extension hypothesis.
//!
//! Given a labeled set `{(x, A(x))}` and a constant `omega1`, coordinate `i`
//! of the hypothesis is
//!
//! ```text
//! g_i(y) = min over training pairs of ( x_i + omega1 * ||y - A(x)|| )
//! ```
//!
//! Each `g_i` is `omega1`-Lipschitz, so the stacked map is
//! `omega1 * sqrt(N)`-Lipschitz in the Euclidean norm, and it reproduces every
//! training signal exactly when `omega1` is at least the pairwise constant of
//! the training set.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::labeled::LabeledSet;
use crate::lipschitz::exact_constant;
use crate::rng::seeded;
use crate::tol::TOL_CONSTANT_REL;
use crate::vector::{check_dim, dist};

#[derive(Debug, Clone, PartialEq)]
pub struct MwetHypothesis {
    training: LabeledSet,
    omega1: f64,
    omega_global: f64,
}

impl MwetHypothesis {
    /// Fits the extension on `training`.
    ///
    /// Without `omega1` the exact pairwise constant of the set is used (zero
    /// for a single pair, which yields a constant map). A supplied constant
    /// below the pairwise constant is rejected.
    pub fn fit(training: LabeledSet, omega1: Option<f64>) -> Result<Self> {
        let required = if training.len() >= 2 {
            exact_constant(&training)?.omega
        } else {
            0.0
        };
        let omega1 = match omega1 {
            None => required,
            Some(w) => {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::Parameter("omega1 must be nonnegative and finite"));
                }
                if w < required * (1.0 - TOL_CONSTANT_REL) {
                    return Err(Error::ConstantTooSmall {
                        supplied: w,
                        required,
                    });
                }
                w
            }
        };
        let omega_global = omega1 * libm::sqrt(training.signal_dim() as f64);
        Ok(Self {
            training,
            omega1,
            omega_global,
        })
    }

    pub fn training(&self) -> &LabeledSet {
        &self.training
    }

    /// Per-coordinate constant.
    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    /// `omega1 * sqrt(N)`.
    pub fn omega_global(&self) -> f64 {
        self.omega_global
    }

    pub fn input_dim(&self) -> usize {
        self.training.obs_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.training.signal_dim()
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), y.len())?;
        let mut out = vec![0.0; self.output_dim()];
        self.evaluate_into(y, &mut out);
        Ok(out)
    }

    /// Writes `G(y)` into `out`; lengths are the caller's responsibility.
    pub fn evaluate_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(f64::INFINITY);
        for pair in self.training.pairs() {
            let reach = self.omega1 * dist(y, &pair.observation);
            for (o, xi) in out.iter_mut().zip(pair.signal.iter()) {
                let candidate = xi + reach;
                if candidate < *o {
                    *o = candidate;
                }
            }
        }
    }

    /// Largest `||G(A(x)) - x||` over the training pairs.
    pub fn max_training_residual(&self) -> f64 {
        let mut buf = vec![0.0; self.output_dim()];
        self.training
            .pairs()
            .iter()
            .map(|p| {
                self.evaluate_into(&p.observation, &mut buf);
                dist(&buf, &p.signal)
            })
            .fold(0.0, f64::max)
    }

    /// Axis-aligned box around the training observations, each side widened
    /// to 1.5 times its extent (minimum half-width 0.5).
    pub fn audit_box(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.input_dim();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for p in self.training.pairs() {
            for k in 0..m {
                lo[k] = lo[k].min(p.observation[k]);
                hi[k] = hi[k].max(p.observation[k]);
            }
        }
        for k in 0..m {
            let center = 0.5 * (lo[k] + hi[k]);
            let half = (0.75 * (hi[k] - lo[k])).max(0.5);
            lo[k] = center - half;
            hi[k] = center + half;
        }
        (lo, hi)
    }

    /// Largest observed `||G(y1) - G(y2)|| / ||y1 - y2||` over `num_pairs`
    /// uniform draws from [`MwetHypothesis::audit_box`].
    pub fn lipschitz_audit(&self, num_pairs: usize, seed: u64) -> Result<f64> {
        if num_pairs == 0 {
            return Err(Error::Parameter("num_pairs must be at least 1"));
        }
        let (lo, hi) = self.audit_box();
        let mut rng = seeded(seed);
        let m = self.input_dim();
        let (mut y1, mut y2) = (vec![0.0; m], vec![0.0; m]);
        let (mut g1, mut g2) = (vec![0.0; self.output_dim()], vec![0.0; self.output_dim()]);
        let mut worst = 0.0_f64;
        for _ in 0..num_pairs {
            for k in 0..m {
                y1[k] = rng.random_range(lo[k]..hi[k]);
                y2[k] = rng.random_range(lo[k]..hi[k]);
            }
            let dy = dist(&y1, &y2);
            if dy == 0.0 {
                continue;
            }
            self.evaluate_into(&y1, &mut g1);
            self.evaluate_into(&y2, &mut g2);
            worst = worst.max(dist(&g1, &g2) / dy);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::operators::Operator;
    use crate::rng::normal_vector;
    use crate::tol::TOL_CERT;

    fn identity_region() -> MwetHypothesis {
        let set = LabeledSet::from_operator(&Operator::PiecewiseExample, &[vec![0.3], vec![0.9]])
            .unwrap();
        MwetHypothesis::fit(set, Some(1.0)).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn fit_and_evaluate_examples() {
        let h = identity_region();
        assert_eq!(h.omega_global(), 1.0);
        assert!(close(h.evaluate(&[0.3]).unwrap()[0], 0.3));
        assert!(close(h.evaluate(&[0.6]).unwrap()[0], 0.6));
        assert!(close(h.evaluate(&[1.0]).unwrap()[0], 1.0));
        assert!(matches!(
            h.evaluate(&[0.1, 0.2]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn default_constant_matches_pairwise_constant() {
        let set = LabeledSet::from_operator(&Operator::PiecewiseExample, &[vec![0.3], vec![0.9]])
            .unwrap();
        let h = MwetHypothesis::fit(set, None).unwrap();
        assert!(close(h.omega1(), 1.0));
    }

    #[test]
    fn singleton_gives_constant_map() {
        let set = LabeledSet::from_operator(&Operator::PiecewiseExample, &[vec![2.5]]).unwrap();
        let h = MwetHypothesis::fit(set, None).unwrap();
        for y in [-4.0, 0.0, 1.5, 7.0] {
            assert_eq!(h.evaluate(&[y]).unwrap(), vec![2.5]);
        }
        assert_eq!(h.lipschitz_audit(100, 1).unwrap(), 0.0);
    }

    #[test]
    fn too_small_constant_is_rejected() {
        let set = LabeledSet::from_operator(&Operator::PiecewiseExample, &[vec![0.5], vec![2.5]])
            .unwrap();
        assert_eq!(
            MwetHypothesis::fit(set, Some(1.0)).unwrap_err(),
            Error::ConstantTooSmall {
                supplied: 1.0,
                required: 2.0
            }
        );
    }

    #[test]
    fn identity_region_audit_is_bounded_by_one() {
        assert!(identity_region().lipschitz_audit(10_000, 3).unwrap() <= 1.0 + TOL_CERT);
    }

    fn random_hypothesis(seed: u64) -> MwetHypothesis {
        let mut rng = seeded(seed);
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=n.min(4));
        let op =
            Operator::matrix(Matrix::new(m, n, normal_vector(&mut rng, m * n)).unwrap()).unwrap();
        let count = rng.random_range(1..=100);
        let signals: Vec<Vec<f64>> = (0..count).map(|_| normal_vector(&mut rng, n)).collect();
        let set = LabeledSet::from_operator(&op, &signals).unwrap();
        MwetHypothesis::fit(set, None).unwrap()
    }

    #[test]
    fn interpolates_training_pairs() {
        for seed in 0..100 {
            let h = random_hypothesis(seed);
            assert!(h.max_training_residual() <= 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn coordinate_and_global_bounds_hold() {
        for seed in 0..30 {
            let h = random_hypothesis(seed);
            let (lo, hi) = h.audit_box();
            let mut rng = seeded(1000 + seed);
            for _ in 0..500 {
                let y1: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, u)| rng.random_range(*l..*u))
                    .collect();
                let y2: Vec<f64> = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, u)| rng.random_range(*l..*u))
                    .collect();
                let (g1, g2) = (h.evaluate(&y1).unwrap(), h.evaluate(&y2).unwrap());
                let dy = dist(&y1, &y2);
                for i in 0..g1.len() {
                    assert!((g1[i] - g2[i]).abs() <= h.omega1() * dy + 1e-9);
                }
                assert!(dist(&g1, &g2) <= h.omega_global() * dy + 1e-9);
            }
        }
    }

    #[test]
    fn adding_training_pairs_never_raises_coordinates() {
        for seed in 0..20 {
            let h = random_hypothesis(seed);
            if h.training().len() < 3 {
                continue;
            }
            let half: Vec<usize> = (0..h.training().len() / 2).collect();
            let smaller =
                MwetHypothesis::fit(h.training().subset(&half).unwrap(), Some(h.omega1())).unwrap();
            let mut rng = seeded(seed);
            for _ in 0..200 {
                let y = normal_vector(&mut rng, h.input_dim());
                let (big, small) = (h.evaluate(&y).unwrap(), smaller.evaluate(&y).unwrap());
                assert!(big.iter().zip(&small).all(|(b, s)| b <= s));
            }
        }
    }
}
