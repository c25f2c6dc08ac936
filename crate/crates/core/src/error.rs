use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Why a labeled set failed validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelingFault {
    /// The stored observation is `residual` away from `A(signal)`.
    Mismatch { residual: f64 },
    /// The signal duplicates the one at index `of`.
    Duplicate { of: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },
    #[error("observation dimension {obs_dim} exceeds signal dimension {signal_dim}")]
    Shape { obs_dim: usize, signal_dim: usize },
    #[error("labeling error at pair {index}: {fault:?}")]
    Labeling { index: usize, fault: LabelingFault },
    #[error("value {value} outside the operator domain [0, 3]")]
    Domain { value: f64 },
    #[error("calibration set is empty")]
    Calibration,
    #[error("operator is not injective on the set: pairs {first} and {second} collide")]
    NotInjective { first: usize, second: usize },
    #[error("set of size {size} is too small for this operation")]
    DegenerateSet { size: usize },
    #[error("scale factor must be nonzero")]
    DegenerateScale,
    #[error("operation requires a linear (matrix) operator")]
    OperatorClass,
    #[error("extension constant {supplied} is below the training set constant {required}")]
    ConstantTooSmall { supplied: f64, required: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(&'static str),
    #[error("coordinate {coordinate} = {value} lies outside the unit cube")]
    OutOfBox { coordinate: usize, value: f64 },
    #[error("set is not Lipschitz at the given constant: pair ({}, {}) has ratio {ratio}", .witness.0, .witness.1)]
    NotLipschitz { witness: (usize, usize), ratio: f64 },
    #[error("matrix has numerical rank zero")]
    RankZero,
    #[error("operator has no null space (M = N); the reduced hypothesis is empty")]
    NoNullSpace,
    #[error("enumeration of {subsets} column subsets exceeds the cap {cap}")]
    TooLarge { subsets: u128, cap: u128 },
    #[error("restricted isometry constant {delta} is not below 1")]
    NotApplicable { delta: f64 },
}

impl Error {
    /// Stable name of the error class, for diagnostics and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "DimensionError",
            Error::EmptyVector => "EmptyVectorError",
            Error::NonFinite { .. } => "NonFiniteError",
            Error::Shape { .. } => "ShapeError",
            Error::Labeling { .. } => "LabelingError",
            Error::Domain { .. } => "DomainError",
            Error::Calibration => "CalibrationError",
            Error::NotInjective { .. } => "NotInjectiveError",
            Error::DegenerateSet { .. } => "DegenerateSetError",
            Error::DegenerateScale => "DegenerateScaleError",
            Error::OperatorClass => "OperatorClassError",
            Error::ConstantTooSmall { .. } => "ConstantTooSmallError",
            Error::Parameter(_) => "ParameterError",
            Error::OutOfBox { .. } => "OutOfBoxError",
            Error::NotLipschitz { .. } => "NotLipschitzError",
            Error::RankZero => "RankZeroError",
            Error::NoNullSpace => "NoNullSpaceError",
            Error::TooLarge { .. } => "TooLargeError",
            Error::NotApplicable { .. } => "NotApplicableError",
        }
    }
}
