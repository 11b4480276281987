//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by training, evaluation, data handling and persistence.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("feature-space dimension overflows for degree s={s}, input dimension d={d}")]
    FeatureDimOverflow { s: u32, d: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label must be -1 or +1, found {found} at row {row}")]
    InvalidLabel { found: f64, row: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty {0} split")]
    EmptySplit(&'static str),

    #[error("malformed CSV row at line {line}: {reason}")]
    CsvFormat { line: usize, reason: String },

    #[error("non-finite feature value at line {line}, column {column}")]
    NonFiniteFeature { line: usize, column: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model file is corrupt: {0}")]
    ModelFormat(String),

    #[error("model file checksum mismatch")]
    ChecksumMismatch,

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u16),

    #[error("LP oracle limited to m <= {limit}, got m = {m}")]
    LpTooLarge { m: usize, limit: usize },

    #[error("LP reported infeasible (max phase-1 residual {residual:.3e}); the dual of the hinge problem is always feasible, so this indicates numerical breakdown")]
    LpInfeasible { residual: f64 },

    #[error("LP solver failed: {0}")]
    LpNumerical(String),

    #[error("non-finite iterate at iteration {iter}: {detail}")]
    NonFiniteIterate { iter: usize, detail: String },

    #[error("SPD factorization of the normal matrix failed")]
    FactorizationFailure,
}

pub type Result<T> = std::result::Result<T, Error>;
