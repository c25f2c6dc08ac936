//! Default tolerances shared by every module.

/// Maximum distance between `A(x)` and a stored observation for a pair to
/// count as labeled.
pub const TOL_EVAL: f64 = 1e-9;

/// Two signals closer than this are duplicates.
pub const TOL_DUP: f64 = 1e-12;

/// Absolute slack in every `<=` comparison of a Lipschitz inequality.
pub const TOL_CERT: f64 = 1e-9;

/// Relative factor for the observation-collision threshold; the absolute
/// threshold is `TOL_INJ_REL * (1 + max observation norm)`.
pub const TOL_INJ_REL: f64 = 1e-12;

/// Singular values at or below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative slack when comparing a supplied extension constant with the
/// exact pairwise constant of the training set.
pub const TOL_CONSTANT_REL: f64 = 1e-9;

/// Largest number of column subsets the exhaustive RIP search will visit.
pub const ENUMERATION_CAP: u128 = 10_000_000;
