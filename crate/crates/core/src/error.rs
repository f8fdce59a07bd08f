use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller violated an argument contract (empty input, wrong shape, ...).
    #[error("usage error: {0}")]
    Usage(String),
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A symmetric matrix that should be positive definite produced a
    /// nonpositive pivot.
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    /// The requested size exceeds what an exhaustive routine will enumerate.
    #[error("refused: {0}")]
    TooLarge(String),
    /// Parameters outside the range a procedure supports.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A self-consistency check inside a computation failed.
    #[error("inconsistency: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
