//! Per-sample weights for the score matrix `S`.
//!
//! Both schemes are binary: labels are `+1` / `-1`.

use thiserror::Error;

pub mod fuzzy;
pub mod intuitionistic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("label {value} at index {index} is not +1 or -1")]
    InvalidLabel { index: usize, value: i8 },
    #[error("the {0} class has no samples")]
    EmptyClass(&'static str),
    #[error("{what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("parameter {name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("kernel distance radicand {0} is negative; kernel is not positive semidefinite")]
    InvalidKernel(f64),
    #[error("membership {theta} and non-membership {theta_tilde} must lie in [0, 1] with sum <= 1")]
    InvalidScoreInputs { theta: f64, theta_tilde: f64 },
}

pub(crate) fn check_labels(labels: &[i8], n: usize) -> Result<(), ScoreError> {
    if labels.len() != n {
        return Err(ScoreError::LengthMismatch {
            what: "labels",
            expected: n,
            got: labels.len(),
        });
    }
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
        return Err(ScoreError::InvalidLabel { index, value });
    }
    if !labels.contains(&1) {
        return Err(ScoreError::EmptyClass("positive"));
    }
    if !labels.contains(&-1) {
        return Err(ScoreError::EmptyClass("negative"));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<(), ScoreError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ScoreError::BadParameter { name, value })
    }
}
