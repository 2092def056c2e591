//! Error type shared by the whole crate.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, ScreenError>;

/// Everything that can go wrong while ingesting data, configuring a run or
/// evaluating a statistic.
#[derive(Debug, thiserror::Error)]
pub enum ScreenError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("cannot parse \"{value}\" as a number at row {row}, column \"{column}\"")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at row {row}, column \"{column}\"")]
    NonFinite { row: usize, column: String },

    #[error("dataset needs at least 2 rows, found {0}")]
    TooFewRows(usize),

    #[error("dataset has no feature columns")]
    NoFeatures,

    #[error("only one class in the label column")]
    SingleClass,

    #[error("label column \"{0}\" not found")]
    LabelColumnNotFound(String),

    #[error("unknown column \"{0}\" in group file")]
    UnknownColumn(String),

    #[error("duplicate column \"{0}\" across groups")]
    DuplicateColumn(String),

    #[error("empty group \"{0}\"")]
    EmptyGroup(String),

    #[error("group index {index} out of range for {count} groups")]
    GroupIndexOutOfRange { index: usize, count: usize },

    #[error("insufficient points: need at least 2, got {0}")]
    InsufficientPoints(usize),

    #[error("dimension mismatch: {len} values do not pack into vectors of dimension {dim}")]
    DimensionMismatch { len: usize, dim: usize },

    #[error("inputs have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl ScreenError {
    /// True for errors caused by a bad request (flags, configuration) rather
    /// than by the data itself. The CLI maps these to a distinct exit code.
    pub fn is_usage(&self) -> bool {
        matches!(self, ScreenError::InvalidConfig(_))
    }
}
