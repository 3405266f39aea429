//! Broad learning system classifiers with fuzzy and intuitionistic-fuzzy
//! sample weighting.
//!
//! Three variants share one network and one solver and differ only in the
//! per-sample weights placed on the training loss:
//!
//! * `Bls` weights every sample equally;
//! * `FuzzyBls` weights by input-space distance to the class centre;
//! * `IntuitionisticBls` combines kernel-space membership with the share of
//!   opposite-class samples in each neighbourhood.
//!
//! The [`eval`] and [`stats`] modules implement k-fold cross-validation, grid
//! search and the rank-based comparison tests used to benchmark classifiers
//! across many datasets.

pub mod cli;
pub mod data;
pub mod eval;
pub mod linalg;
pub mod network;
pub mod scoring;
pub mod stats;
pub mod trainer;

pub use linalg::{DiagonalWeights, Matrix};
