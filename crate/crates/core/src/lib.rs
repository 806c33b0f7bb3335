//! Numerical laboratory for the statistical mechanics of planar vortex
//! flows: Green and Robin functions of bounded domains, point-vortex
//! Hamiltonians and their blow-up indicators, solvers and continuation for
//! the mean field and Gelfand equations, and entropy-energy diagrams.

pub mod analytic;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod green;
pub mod linalg;
pub mod pde;
pub mod stencil;
pub mod weight;

pub use error::{Error, Result};
