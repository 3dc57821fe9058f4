use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SmdsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SmdsError {
    #[error("invalid label: {0}")]
    InvalidLabel(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("degenerate holdout: {0}")]
    DegenerateHoldout(String),

    #[error("ill-conditioned projection: condition number {0:.3e} exceeds 1e8")]
    IllConditioned(f64),

    #[error("checksum mismatch for {path}: expected {expected}, found {found}")]
    ChecksumMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("truncated payload {path}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("malformed manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },

    #[error("io error on {path}: {cause}")]
    Io {
        path: PathBuf,
        cause: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SmdsError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SmdsError::Io {
            path: path.into(),
            cause: source,
        }
    }
}
