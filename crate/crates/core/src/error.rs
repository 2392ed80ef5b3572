use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum MbpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MbpError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(MbpError::InvalidArgument(msg.into()))
}

pub(crate) fn config_err<T>(key: &str, msg: impl Into<String>) -> Result<T> {
    Err(MbpError::Config {
        key: key.to_string(),
        message: msg.into(),
    })
}
