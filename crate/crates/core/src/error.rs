use thiserror::Error;

/// Errors raised by the tensor, Gröbner, moment and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported norm exponent p = {0}: odd finite p does not define the nuclear p-norm ideal")]
    OddExponent(u32),

    #[error("reduced polynomial has degree {degree}, exceeding 2k = {limit}")]
    DegreeExceeded { degree: u32, limit: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("solver did not reach an optimal point: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
