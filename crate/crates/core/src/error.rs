use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by operators, schemes, diagnostics and experiment runners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered{}", context_suffix(.context))]
    NonFinite { context: String },

    /// A parameter violates one of the documented inequalities. The message
    /// names the inequality.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterate became NaN or infinite. `last_valid_k` is the last index
    /// whose iterate was finite.
    #[error("iteration diverged after k = {last_valid_k}")]
    Diverged { last_valid_k: usize },

    #[error("{0}")]
    Diagnostics(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn context_suffix(context: &str) -> String {
    if context.is_empty() {
        String::new()
    } else {
        format!(" in {context}")
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
