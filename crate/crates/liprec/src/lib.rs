//! File formats, signal generators, the batch experiment runner and the
//! bundled acceptance suite for [`liprec_core`].
//!
//! A problem file names an operator, a signal sample (explicit or generated)
//! and a task; [`tasks::run_problem`] turns it into a [`format::Report`] of
//! named assertions. [`selftest`] runs the fixed-seed acceptance criteria.

pub mod error;
pub mod format;
pub mod generators;
pub mod parallel;
pub mod selftest;
pub mod tasks;

pub use error::CliError;
pub use format::{ProblemFile, Report};
