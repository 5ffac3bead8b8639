use thiserror::Error;

/// Errors surfaced by the solvers.
///
/// `Domain` means the caller asked for something outside a routine's
/// mathematical domain. `InternalConsistency` means a self-check that
/// should hold by construction failed (a bug, not a usage error).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("ill-conditioned problem: {0}")]
    Conditioning(String),

    #[error("domain too small: {0}")]
    DomainSize(String),

    #[error("no closed form available: {0}")]
    NoClosedForm(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::InternalConsistency(msg.into())
    }
}
