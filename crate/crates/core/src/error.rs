use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular geometry: {0}")]
    SingularGeometry(String),
    #[error("accuracy: {0}")]
    Accuracy(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("cannot construct logical target: {0}")]
    Construction(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
