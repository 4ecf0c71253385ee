use std::path::PathBuf;

use thiserror::Error;

use crate::gev::GevParams;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Format {
        path: String,
        line: u64,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("covariate has no value for year {year}")]
    Alignment { year: i32 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("chain initialization failed: {0}")]
    Initialization(String),

    #[error("optimizer did not converge after {iterations} iterations (best log-likelihood {best_value})")]
    Convergence {
        iterations: usize,
        best_value: f64,
        best: Box<GevParams>,
    },

    #[error("cumulative uncertainty decreased at source {source_index}: {previous} -> {current}")]
    NonMonotone {
        source_index: usize,
        previous: f64,
        current: f64,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Initialization(_) | Error::Convergence { .. } | Error::NonMonotone { .. } => {
                ErrorClass::Numerical
            }
            _ => ErrorClass::Validation,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Numerical => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
