use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the region where the requested quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input violated a structural contract (Hermiticity, normalization, shape).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A Fock-basis truncation was too small for the requested accuracy.
    #[error("truncation insufficient: {0}")]
    Truncation(String),
    /// The operation is not available for this state representation.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A radius scan finished without a sign change of the determinant.
    #[error("not detected within scan range (cap {cap})")]
    NotDetected { cap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
