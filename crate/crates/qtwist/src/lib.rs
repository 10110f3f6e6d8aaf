//! Numerical workbench for the colored Jones polynomials of twist knots at
//! the roots of unity e^{2πi/(N+1/M)} and e^{2πi/N}: exact-order evaluation,
//! the quantum dilogarithm, the potential function and its critical point,
//! and the Fourier-coefficient side of the Poisson summation argument.

pub mod error;
pub mod fourier;
pub mod numerics;
pub mod potential;
pub mod qjones;
pub mod saddle;
pub mod special;

pub use error::{Error, Result};
pub use numerics::{HpComplex, HpReal, PrecisionContext};
pub use qjones::{GridPoint, RootSpec, TwistParam};

/// Crate version, recorded in report provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
