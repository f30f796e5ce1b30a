use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel descriptor {input:?}: {reason}")]
    KernelParse { input: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("kernel is singular (rank {rank} < {size})")]
    SingularKernel { rank: usize, size: usize },

    #[error("{what} of size {size} exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("integrity violation: {0}")]
    Integrity(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("invalid code descriptor: {0}")]
    Descriptor(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn out_of_range(what: &'static str, value: impl ToString) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
