use thiserror::Error;

/// Errors raised by the library. Divergent integrals are not errors; they are
/// reported through explicit flags on the result types.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Param(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid too large: {0}")]
    Size(String),
    #[error("invalid body: {0}")]
    Body(String),
    #[error("singular map: {0}")]
    Singular(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
