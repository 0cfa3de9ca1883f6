use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (negative energy, k <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A profile, config or grid failed validation before any computation.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative or adaptive procedure did not reach its tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("config error: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
