use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("{context}: non-finite value at cell ({ix}, {iy}) on step {step}")]
    NonFinite {
        context: &'static str,
        ix: usize,
        iy: usize,
        step: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bad magic: expected \"ECGF\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    #[error("unknown tensor format version {0}")]
    UnknownVersion(u32),

    #[error("unknown dtype code {0}")]
    UnknownDtype(u32),

    #[error("truncated tensor payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("zero total power: spectral entropy is undefined for an all-zero signal")]
    ZeroPower,

    #[error("zero variance: R^2 is undefined for a constant target")]
    ZeroVariance,

    #[error("class {class} has {members} members, fewer than the {buckets} split buckets")]
    ClassTooSmall {
        class: String,
        members: usize,
        buckets: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Exit code convention: 1 for user/config errors, 2 for numerical or
    /// internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. } | Error::Numerical(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
