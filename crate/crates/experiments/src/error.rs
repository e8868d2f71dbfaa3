use std::path::PathBuf;

use deimkit::DeimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] DeimError),

    #[error("Newton iteration failed at step {step} (t = {time:.6}): residual {residual:.3e} after {iterations} iterations")]
    Newton {
        step: usize,
        time: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("linear solve failed: pivot {pivot:.3e} at row {row}")]
    LinearSolve { row: usize, pivot: f64 },

    #[error("{count} error bound check(s) violated; first: {first}")]
    BoundViolation { count: usize, first: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExpError {
    /// 2 for bad input or configuration, 3 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Config(_) | ExpError::Io { .. } => 2,
            ExpError::Numerical(DeimError::Parse { .. } | DeimError::Io(_)) => 2,
            _ => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ExpError::Config(msg.into())
    }
}

pub type Result<T, E = ExpError> = std::result::Result<T, E>;
