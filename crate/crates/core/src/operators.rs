//! Concrete transforms `A: R^N -> R^M` with `M <= N`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::vector::{check_dim, check_finite};

/// A dense `M x N` matrix acting by matrix-vector product.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOperator {
    matrix: Matrix,
}

impl MatrixOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() > matrix.cols() {
            return Err(Error::Shape {
                obs_dim: matrix.rows(),
                signal_dim: matrix.cols(),
            });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn signal_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn obs_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.signal_dim(), x.len())?;
        check_finite(x)?;
        Ok(self.matrix.apply(x))
    }
}

/// The one-dimensional example on `[0, 3]`: identity on `[0, 1)`, constant
/// `1` on `[1, 2]`, and `x - 1` on `(2, 3]`.
pub fn piecewise_example(x: f64) -> Result<f64> {
    if !(0.0..=3.0).contains(&x) {
        return Err(Error::Domain { value: x });
    }
    Ok(if x < 1.0 {
        x
    } else if x <= 2.0 {
        1.0
    } else {
        x - 1.0
    })
}

/// `(inner(x) - shift) / scale`, fitted so a calibration sample lands in the
/// unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedOperator {
    inner: Operator,
    shift: Vec<f64>,
    scale: f64,
}

impl NormalizedOperator {
    pub fn new(inner: Operator, shift: Vec<f64>, scale: f64) -> Result<Self> {
        check_dim(inner.obs_dim(), shift.len())?;
        check_finite(&shift)?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Parameter("normalization scale must be positive"));
        }
        Ok(Self {
            inner,
            shift,
            scale,
        })
    }

    pub fn inner(&self) -> &Operator {
        &self.inner
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.inner.apply(x)?;
        self.rescale_in_place(&mut y);
        Ok(y)
    }

    /// Maps an inner observation into normalized coordinates.
    pub fn rescale_in_place(&self, y: &mut [f64]) {
        for (v, b) in y.iter_mut().zip(&self.shift) {
            *v = (*v - b) / self.scale;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Matrix(MatrixOperator),
    PiecewiseExample,
    Normalized(Box<NormalizedOperator>),
}

impl Operator {
    pub fn matrix(matrix: Matrix) -> Result<Self> {
        MatrixOperator::new(matrix).map(Operator::Matrix)
    }

    pub fn signal_dim(&self) -> usize {
        match self {
            Operator::Matrix(m) => m.signal_dim(),
            Operator::PiecewiseExample => 1,
            Operator::Normalized(n) => n.inner.signal_dim(),
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Operator::Matrix(m) => m.obs_dim(),
            Operator::PiecewiseExample => 1,
            Operator::Normalized(n) => n.inner.obs_dim(),
        }
    }

    pub fn as_matrix(&self) -> Option<&MatrixOperator> {
        match self {
            Operator::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Operator::Matrix(m) => m.apply(x),
            Operator::PiecewiseExample => {
                check_dim(1, x.len())?;
                Ok(alloc::vec![piecewise_example(x[0])?])
            }
            Operator::Normalized(n) => n.apply(x),
        }
    }
}

/// Fits the unit-cube wrapper of `op` on `calibration`.
///
/// The shift is the coordinate-wise minimum of the calibration outputs and
/// the scale is the largest coordinate range (1 when every range is zero).
/// The returned factor is the scale: a set that is `omega`-Lipschitz under
/// `op` is `omega * scale`-Lipschitz under the wrapper.
pub fn normalize(op: &Operator, calibration: &[Vec<f64>]) -> Result<(NormalizedOperator, f64)> {
    if calibration.is_empty() {
        return Err(Error::Calibration);
    }
    let outputs = calibration
        .iter()
        .map(|x| op.apply(x))
        .collect::<Result<Vec<_>>>()?;
    let (shift, scale) = bounding_shift_scale(&outputs);
    let wrapped = NormalizedOperator::new(op.clone(), shift, scale)?;
    Ok((wrapped, scale))
}

/// Coordinate-wise minimum and the largest coordinate range of `points`
/// (range replaced by 1 when it is zero). `points` must be nonempty.
pub(crate) fn bounding_shift_scale(points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let dim = points[0].len();
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in &points[1..] {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let range = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| h - l)
        .fold(0.0_f64, f64::max);
    (lo, if range > 0.0 { range } else { 1.0 })
}
