//! Error type shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FaithError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Tab-separated input rejected because too many rows failed to parse.
    #[error("{path}: {bad} of {total} data lines malformed (tolerance 1%), first bad lines: {lines:?}")]
    MalformedInput {
        path: PathBuf,
        bad: usize,
        total: usize,
        lines: Vec<usize>,
    },

    #[error("{path} line {line}: {reason}")]
    BadRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("index file corrupt: {0}")]
    IndexCorrupt(String),

    #[error("index format version {found} not supported (expected {expected})")]
    IndexVersion { found: u32, expected: u32 },

    #[error("provider error: {0}")]
    Provider(String),

    #[error("extraction failed: {0}")]
    Extraction(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{0}")]
    EmptyGraph(String),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, FaithError>;

impl FaithError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FaithError::Io {
            path: path.into(),
            source,
        }
    }
}
