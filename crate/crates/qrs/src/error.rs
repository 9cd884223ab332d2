//! Error types shared across the engine.

use thiserror::Error;

/// Errors raised while evaluating exact expressions.
///
/// `DivisionByZero` is recoverable by design: it marks a parameter point on
/// the polar set of an identity, and verification drivers respond by
/// resampling the point rather than aborting.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero (parameter point lies on a polar set)")]
    DivisionByZero,
    #[error("zero cannot be raised to a negative power")]
    ZeroToNegativePower,
    #[error("nome out of range: |q| must be < 1 for infinite products")]
    NomeOutOfRange,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("singular diagonal entry at index {0}")]
    SingularDiagonal(String),
    #[error("unknown identity: {0}")]
    UnknownIdentity(String),
    #[error("no admissible point found after {0} resampling attempts")]
    AdmissiblePointNotFound(usize),
    #[error("no registered one-variable counterpart for {0}")]
    NoRegisteredCounterpart(String),
    #[error("convergence condition violated: {0}")]
    ConvergenceConditionViolated(String),
    #[error("residuals failed to shrink: {0}")]
    ConvergenceNotObserved(String),
    #[error("missing parameter: {0}")]
    MissingParameter(String),
    #[error("{0}")]
    Config(String),
}

pub type EvalResult<T> = Result<T, EvalError>;
