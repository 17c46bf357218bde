use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("transition matrix is reducible: {0}")]
    Reducible(String),

    #[error("order limit exceeded: requested {requested}, maximum {max}")]
    OrderLimit { requested: usize, max: usize },

    #[error("infeasible germ: {0}")]
    Infeasible(String),

    #[error("a2 = {a2} outside the computed feasible range [{lo}, {hi}]")]
    OutOfRange { a2: f64, lo: f64, hi: f64 },

    #[error("degenerate potential: {0}")]
    Degenerate(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("no convergence: {0}")]
    Convergence(String),
}

/// Coarse classification used by front ends to map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The input violates a mathematical precondition.
    Domain,
    /// A solver or iteration failed on admissible input.
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Convergence(_) | Error::Overflow(_) => ErrorClass::Numeric,
            _ => ErrorClass::Domain,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
