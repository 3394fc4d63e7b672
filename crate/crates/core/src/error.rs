use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A kernel or coefficient series could not be certified within the
    /// degree cap, or was requested on the boundary where it may diverge.
    #[error("series did not converge: {0}")]
    NonConvergent(String),

    /// A space or differentiation pair violates its admissibility condition.
    #[error("inadmissible parameters: {0}")]
    Admissibility(String),

    /// An integrand failed at a quadrature node.
    #[error("integrand failed at a quadrature node: {0}")]
    EvaluationFailure(String),

    /// The requested inclusion pair has no sharp criterion implemented.
    #[error("unsupported space pair: {0}")]
    UnsupportedPair(String),

    /// Malformed input (dimension, point outside the ball, bad expansion).
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
