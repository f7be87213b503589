//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by validation, quadrature, synthesis, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or parameter outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of its evaluation budget before reaching
    /// the requested tolerance.  Carries the best estimate so far.
    #[error("quadrature budget exhausted after {evals} evaluations: best estimate {value:e} with error estimate {error_estimate:e}")]
    QuadratureBudget {
        value: f64,
        error_estimate: f64,
        evals: u64,
    },

    /// A requested run would exceed a hard resource guard (memory, steps).
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Spectral synthesis failed (e.g. discrete spectrum significantly
    /// negative for the requested model/grid combination).
    #[error("synthesis error: {0}")]
    Synthesis(String),

    /// An operation was asked of a backend that cannot provide it.
    #[error("unsupported backend: {0}")]
    UnsupportedBackend(String),

    /// Malformed persisted field container or configuration payload.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Domain`].
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
