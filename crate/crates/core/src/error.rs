use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point at infinity: {0}")]
    Infinity(String),
    #[error("accuracy error: {0}")]
    Accuracy(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
