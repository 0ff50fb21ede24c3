use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: bad magic at byte {offset} (expected \"CPRP\")")]
    BadMagic { path: PathBuf, offset: u64 },

    #[error("{path}: unsupported version {version} at byte {offset}")]
    UnsupportedVersion {
        path: PathBuf,
        version: u8,
        offset: u64,
    },

    #[error("{path}: unsupported dtype code {dtype} at byte {offset}")]
    UnsupportedDtype {
        path: PathBuf,
        dtype: u8,
        offset: u64,
    },

    #[error("{path}: truncated payload at byte {offset} (expected {expected} more bytes)")]
    TruncatedPayload {
        path: PathBuf,
        offset: u64,
        expected: u64,
    },

    #[error("{path}: value {value} out of range at byte {offset}")]
    ValueOutOfRange {
        path: PathBuf,
        value: f64,
        offset: u64,
    },

    #[error("probability {0} outside [0,1] or non-finite")]
    ProbabilityOutOfRange(f64),

    #[error("invalid dims: {0}")]
    InvalidDims(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("sample stack is empty")]
    EmptyStack,

    #[error("calibration set is empty")]
    EmptyCalibrationSet,

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("manifest already contains split assignments (record {0})")]
    AlreadySplit(String),

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("malformed model file {path}: {reason}")]
    MalformedModelFile { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
