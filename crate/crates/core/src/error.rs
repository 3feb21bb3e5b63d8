//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CpsgError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    /// A bounded quantity left `[0, 1]`; names the offending field and index.
    #[error("{field}[{index}] = {value}: outside [0, 1]")]
    OutOfRange {
        field: String,
        index: usize,
        value: f64,
    },

    #[error("{field}: {message}")]
    InvalidField { field: String, message: String },

    #[error("signal {name} has {got} samples but horizon {horizon} requires at least {need}")]
    SignalTooShort {
        name: String,
        got: usize,
        horizon: usize,
        need: usize,
    },

    #[error("parameter {name} = {value}: must satisfy {constraint}")]
    InvalidParam {
        name: String,
        value: f64,
        constraint: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, CpsgError>;

impl CpsgError {
    pub fn read(path: &std::path::Path, source: std::io::Error) -> Self {
        CpsgError::Read {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn write(path: &std::path::Path, source: std::io::Error) -> Self {
        CpsgError::Write {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn json(path: &std::path::Path, source: serde_json::Error) -> Self {
        CpsgError::Json {
            path: path.display().to_string(),
            source,
        }
    }
}
