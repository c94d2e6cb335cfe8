use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input. `line` is 1-based; 0 means the error is not tied to a line.
    #[error("{}:{line}: {message}", origin)]
    Format {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("expansion collides with {} base word(s): {}", words.len(), words.join(", "))]
    Conflict { words: Vec<String> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("cluster {cluster} has invalid similarity statistics")]
    InvalidClusterStats { cluster: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Degenerate data or a numerical routine that cannot produce a result.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(origin: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            origin: origin.into(),
            line,
            message: message.into(),
        }
    }
}
