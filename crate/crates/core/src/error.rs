use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("negative entry {value} at row {row}, column {col}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {0} cannot be normalized (zero norm)")]
    ZeroRow(usize),

    #[error("no class has at least two members, cannot form similar pairs")]
    NoPositivePairs,

    #[error("only one class present, cannot form dissimilar pairs")]
    NoNegativePairs,

    #[error("invalid pair at line {line}: {reason}")]
    InvalidPair { line: usize, reason: String },

    #[error("pair set is empty")]
    EmptyPairSet,

    #[error("features must be l1-normalized non-negative histograms for the chi2 kernel")]
    NotL1Normalized,

    #[error("{anchors} anchors exceed the kernelized-model limit of {limit}")]
    TooManyAnchors { anchors: usize, limit: usize },

    #[error("K = {k} exceeds the gallery size {gallery}")]
    KExceedsGallery { k: usize, gallery: usize },

    #[error("label count {labels} does not match row count {rows}")]
    LabelCountMismatch { labels: usize, rows: usize },

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),

    #[error("corrupt payload: {0}")]
    CorruptPayload(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("unknown kernel {0:?}")]
    UnknownKernel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training diverged: non-finite value after iteration {0}")]
    NonFinite(u64),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Numeric failures are distinguished from input problems by callers that
    /// map errors onto exit codes.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
