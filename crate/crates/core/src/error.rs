use thiserror::Error;

/// Errors raised by the observer design, certificate and simulation code.
///
/// Infeasible certificates are not errors; they are reported through
/// [`crate::certificate::Certificate::feasible`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure after {iterations} iterations (last residual {residual:e})")]
    NumericalFailure { iterations: usize, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inconsistent result: {0}")]
    Inconsistency(String),

    #[error("simulation became unstable at t = {time}")]
    Instability { time: f64 },

    #[error("insufficient data: {got} usable samples, need at least {need}")]
    InsufficientData { got: usize, need: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
