use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {0} appears more than once")]
    DuplicateMode(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("training patches have zero scatter; nothing to learn")]
    ZeroVariance,

    #[error("{requested} encoders requested but only {available} core coordinates exist")]
    InsufficientCoreDims { requested: usize, available: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("model has no variance order; call compute_variance_order first")]
    MissingVarianceOrder,

    #[error("class {0:?} has a single sample; within-class scatter is undefined")]
    SingletonClass(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("truncated input: {0}")]
    Truncated(String),

    #[error("extent overflow: {0}")]
    ExtentOverflow(String),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::InvalidShape(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
