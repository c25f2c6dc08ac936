//! Labeled pairs and sets: signals together with their known observations.

use alloc::vec::Vec;

use crate::error::{Error, LabelingFault, Result};
use crate::operators::Operator;
use crate::tol::TOL_DUP;
use crate::vector::{check_dim, dist, ObservationVector, SignalVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub signal: SignalVector,
    pub observation: ObservationVector,
}

impl LabeledPair {
    pub fn new(signal: SignalVector, observation: ObservationVector) -> Self {
        Self {
            signal,
            observation,
        }
    }
}

/// A finite, nonempty list of labeled pairs with shared dimensions and no
/// duplicate signals.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pairs: Vec<LabeledPair>,
    signal_dim: usize,
    obs_dim: usize,
}

impl LabeledSet {
    pub fn new(pairs: Vec<LabeledPair>) -> Result<Self> {
        Self::with_tol_dup(pairs, TOL_DUP)
    }

    /// Like [`LabeledSet::new`] with an explicit duplicate threshold. A
    /// threshold of zero admits repeated signals.
    pub fn with_tol_dup(pairs: Vec<LabeledPair>, tol_dup: f64) -> Result<Self> {
        let first = pairs.first().ok_or(Error::DegenerateSet { size: 0 })?;
        let signal_dim = first.signal.len();
        let obs_dim = first.observation.len();
        for pair in &pairs {
            check_dim(signal_dim, pair.signal.len())?;
            check_dim(obs_dim, pair.observation.len())?;
        }
        if let Some((index, of)) = find_duplicate(&pairs, tol_dup) {
            return Err(Error::Labeling {
                index,
                fault: LabelingFault::Duplicate { of },
            });
        }
        Ok(Self {
            pairs,
            signal_dim,
            obs_dim,
        })
    }

    /// Labels `signals` by applying `op` to each of them.
    pub fn from_operator(op: &Operator, signals: &[Vec<f64>]) -> Result<Self> {
        let pairs = signals
            .iter()
            .map(|x| {
                let y = op.apply(x)?;
                Ok(LabeledPair::new(
                    SignalVector::new(x.clone())?,
                    ObservationVector::new(y)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    #[inline]
    pub fn signal(&self, i: usize) -> &[f64] {
        &self.pairs[i].signal
    }

    #[inline]
    pub fn observation(&self, i: usize) -> &[f64] {
        &self.pairs[i].observation
    }

    /// Pairs at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledSet> {
        let pairs = indices.iter().map(|&i| self.pairs[i].clone()).collect();
        Self::with_tol_dup(pairs, 0.0)
    }

    pub fn into_pairs(self) -> Vec<LabeledPair> {
        self.pairs
    }
}

fn find_duplicate(pairs: &[LabeledPair], tol_dup: f64) -> Option<(usize, usize)> {
    if tol_dup <= 0.0 {
        return None;
    }
    for j in 1..pairs.len() {
        for i in 0..j {
            if dist(&pairs[i].signal, &pairs[j].signal) < tol_dup {
                return Some((j, i));
            }
        }
    }
    None
}

/// Checks that every stored observation equals `op(signal)` within
/// `tol_eval` and that no two signals coincide within the default duplicate
/// threshold.
pub fn validate_labeled_set(set: &LabeledSet, op: &Operator, tol_eval: f64) -> Result<()> {
    check_dim(op.signal_dim(), set.signal_dim())?;
    check_dim(op.obs_dim(), set.obs_dim())?;
    for (index, pair) in set.pairs().iter().enumerate() {
        let expected = op.apply(&pair.signal)?;
        let residual = dist(&expected, &pair.observation);
        if !(residual <= tol_eval) {
            return Err(Error::Labeling {
                index,
                fault: LabelingFault::Mismatch { residual },
            });
        }
    }
    if let Some((index, of)) = find_duplicate(set.pairs(), TOL_DUP) {
        return Err(Error::Labeling {
            index,
            fault: LabelingFault::Duplicate { of },
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::MatrixOperator;
    use crate::rng::{normal_vector, seeded};
    use crate::tol::TOL_EVAL;
    use crate::Matrix;
    use alloc::vec;

    fn pair(x: &[f64], y: &[f64]) -> LabeledPair {
        LabeledPair::new(
            SignalVector::new(x.to_vec()).unwrap(),
            ObservationVector::new(y.to_vec()).unwrap(),
        )
    }

    #[test]
    fn self_labeled_set_validates() {
        let op = Operator::PiecewiseExample;
        let set = LabeledSet::from_operator(&op, &[vec![0.2], vec![1.5], vec![2.7]]).unwrap();
        assert_eq!(validate_labeled_set(&set, &op, TOL_EVAL), Ok(()));
    }

    #[test]
    fn perturbed_observation_is_rejected() {
        let op = Operator::PiecewiseExample;
        let set = LabeledSet::new(vec![
            pair(&[0.2], &[0.2]),
            pair(&[0.5], &[0.5 + 10.0 * TOL_EVAL]),
        ])
        .unwrap();
        match validate_labeled_set(&set, &op, TOL_EVAL) {
            Err(Error::Labeling {
                index: 1,
                fault: LabelingFault::Mismatch { .. },
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_signals_are_rejected() {
        let dup = vec![pair(&[0.4], &[0.4]), pair(&[0.4], &[0.4])];
        assert_eq!(
            LabeledSet::new(dup.clone()).unwrap_err(),
            Error::Labeling {
                index: 1,
                fault: LabelingFault::Duplicate { of: 0 }
            }
        );
        // Admitted with a zero threshold, then caught by validation.
        let set = LabeledSet::with_tol_dup(dup, 0.0).unwrap();
        assert_eq!(
            validate_labeled_set(&set, &Operator::PiecewiseExample, TOL_EVAL).unwrap_err(),
            Error::Labeling {
                index: 1,
                fault: LabelingFault::Duplicate { of: 0 }
            }
        );
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let pairs = vec![pair(&[0.0, 1.0], &[0.0]), pair(&[0.0], &[1.0])];
        assert!(matches!(
            LabeledSet::new(pairs),
            Err(Error::Dimension { .. })
        ));
        assert_eq!(
            LabeledSet::new(vec![]).unwrap_err(),
            Error::DegenerateSet { size: 0 }
        );
    }

    #[test]
    fn operator_labeled_sets_always_validate() {
        let mut rng = seeded(21);
        for trial in 0..50 {
            let n = 1 + trial % 6;
            let m = 1 + trial % n;
            let a = Matrix::new(m, n, normal_vector(&mut rng, m * n)).unwrap();
            let op = Operator::Matrix(MatrixOperator::new(a).unwrap());
            let signals: Vec<Vec<f64>> = (0..20).map(|_| normal_vector(&mut rng, n)).collect();
            let set = LabeledSet::from_operator(&op, &signals).unwrap();
            assert_eq!(validate_labeled_set(&set, &op, 1e-9), Ok(()));
        }
    }
}
