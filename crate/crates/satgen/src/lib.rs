//! Synthetic categorical sequence generation by constraint solving, with a
//! built-in privacy auditor that logically inverts the generator.
//!
//! The pipeline: cluster a real cohort by Hamming distance, compile one
//! cluster's pairwise feature-absence structure into a SAT formula, solve
//! with seeded randomisation, and decode the model into a synthetic record.
//! The `reverse` module runs the inversion — which input subsets could have
//! produced a witnessed record — and the `metrics`/`privacy` modules score
//! accuracy and leakage.

pub mod baseline;
pub mod cli;
pub mod error;
pub mod generator;
pub mod hapdata;
pub mod metrics;
pub mod privacy;
pub mod report;
pub mod reverse;
pub mod seed;
pub mod signatures;

pub use error::{Error, Result};
