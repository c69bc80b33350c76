use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structure(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("matrix is numerically singular at pivot row {row} (pivot {pivot:e}, threshold {threshold:e})")]
    Singular {
        row: usize,
        pivot: f64,
        threshold: f64,
    },

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("conflicting constraint on dof {dof}: {first} vs {second}")]
    Constraint { dof: usize, first: f64, second: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
