//! Numerical library for parabolic problems with a rapidly varying random
//! potential: stationary covariance models, Gaussian field synthesis,
//! Brownian scenery functionals, Kipnis-Varadhan correctors, effective
//! (homogenized) coefficients, Feynman-Kac solvers, and the white-in-time
//! noise limit.
//!
//! Everything downstream of a seed is deterministic: random draws go through
//! [`rng::RngStream`], a counter-based keyed generator, so results are
//! reproducible bit-for-bit regardless of thread count.

pub mod covariance;
pub mod effective;
pub mod error;
pub mod field;
pub mod fk;
pub mod numerics;
pub mod paths;
pub mod rng;
pub mod spde;
pub mod stats;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
