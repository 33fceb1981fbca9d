use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("model format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, MlError>;
