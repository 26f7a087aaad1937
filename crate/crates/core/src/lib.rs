//! Pseudospectral simulation and long-range scattering diagnostics for the
//! 1D cubic gauge-invariant NLS and the Hartree equation in 2 and 3
//! dimensions.

pub mod cf;
pub mod config;
pub mod coulomb;
pub mod error;
pub mod evolution;
pub mod field;
pub mod fit;
pub mod fourier;
pub mod grid;
pub mod interp;
pub mod norms;
pub mod propagator;
pub mod reduce;
pub mod resonance;
pub mod scattering;

pub use config::{Equation, InitialShape, SimConfig};
pub use error::{Error, Result};
pub use field::{ComplexField, Space};
pub use grid::Grid;
pub use rustfft::num_complex::Complex64;
