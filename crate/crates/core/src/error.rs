use thiserror::Error;

/// Errors raised by the numerical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical procedure failed or could not certify its result.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The requested accuracy could not be reached; `value` is the best effort.
    #[error("accuracy not reached: value {value:e} with estimated error {est_error:e}")]
    Accuracy { value: f64, est_error: f64 },

    /// The law does not support the requested closed-form operation.
    #[error("unsupported: {0}")]
    Capability(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
