use thiserror::Error;

/// Errors raised by the auction engine and the experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An index or shape does not fit the ambient (n, m).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("capacity error: {what} for (n={n}, m={m}) needs {needed}, cap is {cap}")]
    Capacity {
        what: &'static str,
        n: usize,
        m: usize,
        needed: u128,
        cap: u128,
    },

    /// Malformed input data (negative values, ragged rows, bad bitmasks...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A numeric argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested dimensions are valid but not handled by this construction.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
