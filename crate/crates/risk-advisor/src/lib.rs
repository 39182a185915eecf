//! Failure-risk auditing for black-box classifiers.
//!
//! Trains an ensemble of stochastic gradient boosted trees (E-SGBT) on a
//! classifier's error indicator, decomposes the predicted failure risk into
//! model / aleatoric / epistemic components, and evaluates the resulting
//! scores for failure prediction, selective abstention, out-of-distribution
//! detection and sample-and-retrain mitigation.

pub mod advisor;
pub mod baselines;
pub mod bbox;
pub mod cli;
pub mod datagen;
pub mod eval;
pub mod sgbt;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
