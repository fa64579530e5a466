use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("convergence failure: {what} (change {delta:e} > tolerance {tol:e})")]
    Convergence { what: String, delta: f64, tol: f64 },

    #[error("operator is singular at the boundary of the parameter range: {0}")]
    BoundaryDegenerate(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("non-finite kernel value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },

    #[error("sector mismatch: {0}")]
    Sector(String),

    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
