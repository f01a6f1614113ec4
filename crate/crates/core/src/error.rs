use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("{what} out of range: {value}")]
    RangeError { what: String, value: f64 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("singular Hessian approximation in QP step")]
    SingularHessian,
    #[error("zero-magnitude entry at index {index} cannot be projected onto the unit circle")]
    ZeroEntry { index: usize },
    #[error("line search failed after {backtracks} backtracks")]
    LineSearchFailed { backtracks: usize },
    #[error("zero-interference assumption violated: leakage {leakage:.3e}")]
    AssumptionViolated { leakage: f64 },
    #[error("cannot split {elements} elements into {chains} equal subarrays")]
    PartitionError { elements: usize, chains: usize },
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation error: {0}")]
    ValidationError(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
