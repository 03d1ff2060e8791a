//! Numerical comparison of optomechanical Hamiltonians on truncated Fock spaces.

pub mod analytic;
pub mod error;
pub mod fock;
pub mod harness;
pub mod hamiltonians;
pub mod params;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
