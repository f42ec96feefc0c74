//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An array file's magic bytes or header could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    /// The array file parsed but declares a payload this library does not handle.
    #[error("unsupported array: {0}")]
    UnsupportedArray(String),

    /// Loaded data violates a content invariant (NaN/Inf entries, bad labels, ...).
    #[error("data error: {0}")]
    Data(String),

    /// An operation needs more samples than were provided.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The three modality matrices of a triplet dataset disagree on row count.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A dataset with zero rows was passed where rows are required.
    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    /// Train-mode batch normalization needs at least two rows.
    #[error("batch too small: {0}")]
    BatchTooSmall(String),

    /// A backward pass was given a tape that does not match its forward pass.
    #[error("tape error: {0}")]
    Tape(String),

    /// Non-finite values appeared where finite arithmetic is required.
    #[error("numerics error: {0}")]
    Numerics(String),

    /// An invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// A checkpoint file is corrupt or has an incompatible version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// A decomposition was asked for more components than the data supports.
    #[error("rank error: {0}")]
    Rank(String),

    /// A metric is undefined for the given partition (e.g. a single cluster).
    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-parsable tag for one-line error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Format(_) => "format",
            Error::UnsupportedArray(_) => "unsupported-array",
            Error::Data(_) => "data",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Shape(_) => "shape",
            Error::Alignment(_) => "alignment",
            Error::EmptyDataset(_) => "empty-dataset",
            Error::BatchTooSmall(_) => "batch-too-small",
            Error::Tape(_) => "tape",
            Error::Numerics(_) => "numerics",
            Error::Config(_) => "config",
            Error::Checkpoint(_) => "checkpoint",
            Error::Rank(_) => "rank",
            Error::MetricUndefined(_) => "metric-undefined",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
