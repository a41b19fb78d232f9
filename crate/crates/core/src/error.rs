use thiserror::Error;

/// Errors raised by game construction, mechanisms and verifiers.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: unknown type, invalid action, inconsistent shapes.
    #[error("validation error: {0}")]
    Validation(String),

    /// Parameters outside a mechanism's feasible region.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// Bad numeric parameter (e.g. non-positive Laplace scale).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A problem too large for exact enumeration.
    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    /// Counter queried outside the written range.
    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
