use thiserror::Error;

#[derive(Debug, Error)]
pub enum SymregError {
    #[error("invalid expression: {0}")]
    InvalidExpression(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty Pareto front: {0}")]
    EmptyFront(String),
}

pub type Result<T> = std::result::Result<T, SymregError>;
