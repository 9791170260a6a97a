use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} is undefined for this input")]
    Undefined(&'static str),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("training diverged at step {step}")]
    Diverged { step: usize },
    #[error("row {row}, column '{column}': {msg}")]
    Parse {
        row: usize,
        column: String,
        msg: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
