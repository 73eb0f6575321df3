use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by training, evaluation and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("label {value} at index {index} is not +1 or -1")]
    InvalidLabel { index: usize, value: f64 },

    #[error(
        "kernel matrix {kernel} is not positive definite (duplicate or near-duplicate points?); retry with a positive jitter"
    )]
    NotPositiveDefinite { kernel: usize },

    #[error("degenerate leading coefficient {0} in cubic")]
    DegenerateCubic(f64),

    #[error("linear solve failed for kernel {kernel}")]
    LinearSolve { kernel: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than numerical or I/O failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidLabel { .. }
                | Error::Parse { .. }
        )
    }
}
