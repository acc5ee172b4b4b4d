//! Numerical laboratory for inverse problems of evolution equations on the
//! unit interval and the unit square: finite-difference forward solvers,
//! Volterra deconvolution of time-convolved boundary data, truncated spectral
//! reconstruction of sources and coefficients, and empirical certification of
//! stability rates.

pub mod error;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod norms;
pub mod damped_wave;
pub mod heat;
pub mod inequality;
pub mod probe;
pub mod recovery;
pub mod rng;
pub mod solution;
pub mod stability;
pub mod sweep;
pub mod trace;
pub mod volterra;
pub mod wave;

pub mod eigen;

pub use error::{Error, Result};
pub use field::{ComplexField, Field};
pub use grid::{Boundary, Grid};
pub use kernel::Kernel;
pub use norms::{norm, NormKind};
pub use trace::BoundaryTrace;
