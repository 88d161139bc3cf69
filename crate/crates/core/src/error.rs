use thiserror::Error;

/// Errors surfaced by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("estimator diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("infeasible precoding problem: {0}")]
    Infeasible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
