use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A matrix constructor received a NaN or infinite entry.
    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },

    /// Two operands (or an operand and a spec) disagree on dimensions.
    #[error("dimension mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    DimensionMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    /// An operation defined only for square matrices received a rectangular one.
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    /// A parameter violated its documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterative factorization (SVD, symmetric eigendecomposition) did not converge,
    /// or its result failed the reconstruction check.
    #[error("factorization failure: {0}")]
    FactorizationFailure(String),

    /// The input is structurally unusable (zero reference matrix, single-class AUC mask, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Closed-form Katz requested with beta * spectral_radius >= 1.
    #[error("katz series diverges: beta {beta} * spectral radius {spectral_radius} >= 1")]
    KatzDivergence { beta: f64, spectral_radius: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
