use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Caller passed inconsistent or insufficient data.
    #[error("usage error: {0}")]
    Usage(String),
    /// A configuration cannot be run as requested (e.g. an unstable CFL number).
    #[error("configuration error: {0}")]
    Config(String),
    /// A mathematical precondition does not hold (e.g. `xi <= 1`).
    #[error("domain error: {0}")]
    Domain(String),
    /// Physical input data is invalid (e.g. a negative damping coefficient).
    #[error("validation error: {0}")]
    Validation(String),
    /// A numerical procedure failed to converge or broke down.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
