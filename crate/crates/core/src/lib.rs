//! Numerical core for recovering signals from transformed observations.
//!
//! A signal `x` in `R^N` is observed only through an operator `A: R^N -> R^M`.
//! This crate certifies when a finite signal set admits a Lipschitz inverse,
//! builds the McShane-Whitney extension hypothesis that interpolates a labeled
//! training set, covers the observation cube with a grid so that a finite
//! training set recovers a whole Lipschitz set to a target precision, reduces
//! the learned output space with an SVD for linear operators, and computes
//! exact restricted isometry constants for comparison.
//!
//! The crate is `no_std` and only needs `alloc`. All randomized routines take
//! an explicit 64-bit seed.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod covering;
pub mod error;
pub mod labeled;
pub mod linalg;
pub mod lipschitz;
pub mod mwet;
pub mod operators;
pub mod rip;
pub mod rng;
pub mod svdrec;
pub mod tol;
pub mod vector;

pub use error::{Error, LabelingFault, Result};
pub use labeled::{validate_labeled_set, LabeledPair, LabeledSet};
pub use linalg::Matrix;
pub use lipschitz::{LipschitzCertificate, Verdict};
pub use mwet::MwetHypothesis;
pub use operators::{MatrixOperator, NormalizedOperator, Operator};
pub use vector::{distance, ObservationVector, SignalVector};
