use thiserror::Error;

/// Errors raised by the spectral solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value {value} at point ({x}, {y}, {z})")]
    NonFiniteSample { x: f64, y: f64, z: f64, value: f64 },

    #[error("non-finite field: {0}")]
    NonFiniteField(String),

    #[error("invalid field length: expected {expected}, got {actual}")]
    FieldLength { expected: usize, actual: usize },

    #[error("zero field: {0}")]
    ZeroField(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate quotient: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (last change {last_change:e}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("estimate {estimate} escapes the analytic bracket [{lower}, {upper}]")]
    OutsideBounds { estimate: f64, lower: f64, upper: f64 },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
