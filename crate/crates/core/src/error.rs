use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point or parameter lies outside the domain of a map.
    #[error("domain error: {0}")]
    Domain(String),
    /// A matrix that has to be inverted is numerically singular.
    #[error("singular matrix: {what} (smallest singular value {sigma_min:e})")]
    Singular { what: String, sigma_min: f64 },
    /// A matrix expected to be self-adjoint is not, within tolerance.
    #[error("matrix is not self-adjoint (deviation {deviation:e} > {tol:e})")]
    NotSelfAdjoint { deviation: f64, tol: f64 },
    /// Malformed or invariant-violating input.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A documented precondition on sizes or parameters does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
