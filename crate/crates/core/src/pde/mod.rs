//! Nonlinear solvers for the mean field and Gelfand equations, spectra of
//! their linearizations, and bubbling diagnostics.

mod bubble;
mod newton;
mod spectrum;

pub use bubble::{bubble_diagnose, detect_peaks, refine_peak, BubbleReport, Peak};
pub use newton::{solve_gelfand, solve_mean_field, NewtonOptions};
pub use spectrum::{dense_spectrum, linearized_spectrum, Linearization, SpectrumOptions, SpectrumReport};

use std::sync::Arc;

use crate::error::Result;
use crate::fem::{Fem, ScalarField};
use crate::green::GreenOracle;
use crate::weight::WeightSpec;

/// Shared state for all solves on one mesh with one weight: the FEM
/// workspace plus log h tabulated at quadrature points.
pub struct PdeContext {
    pub fem: Arc<Fem>,
    pub weight: WeightSpec,
    pub log_h_quad: Vec<Vec<f64>>,
}

impl PdeContext {
    pub fn new(fem: Arc<Fem>, weight: WeightSpec, oracle: Option<&GreenOracle>) -> Result<PdeContext> {
        weight.validate_on(&fem)?;
        let log_h_quad = weight.log_h_at_quad(&fem, oracle)?;
        Ok(PdeContext { fem, weight, log_h_quad })
    }

    pub fn constant_weight(fem: Arc<Fem>) -> Result<PdeContext> {
        PdeContext::new(fem, WeightSpec::constant(), None)
    }

    /// h e^u at every quadrature point for interior coefficients `u_int`.
    pub fn h_exp_u_quad(&self, u_int: &[f64]) -> Vec<Vec<f64>> {
        let full = self.fem.scatter(u_int, 0.0);
        let mut out = self.fem.field_at_quad(&full);
        for (t, row) in out.iter_mut().enumerate() {
            for (q, v) in row.iter_mut().enumerate() {
                *v = (self.log_h_quad[t][q] + *v).min(700.0).exp();
            }
        }
        out
    }
}

/// Which parameter a solve was run at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Lambda(f64),
    Eps(f64),
}

impl Param {
    pub fn value(self) -> f64 {
        match self {
            Param::Lambda(v) | Param::Eps(v) => v,
        }
    }
}

/// Converged (or last-iterate) state of a solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: ScalarField,
    /// Translated field u - log int h e^u; h e^{u_tilde} has unit mass.
    pub u_tilde: ScalarField,
    pub param: Param,
    /// Mean field multiplier; equals eps^2 int h e^u for Gelfand states.
    pub lambda: f64,
    /// int h e^u.
    pub exp_mass: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
    /// int h e^{u_tilde}, equal to one up to quadrature roundoff.
    pub mass_check: f64,
    pub converged: bool,
}

impl SolveResult {
    pub fn eps(&self) -> Option<f64> {
        match self.param {
            Param::Eps(e) => Some(e),
            Param::Lambda(_) => None,
        }
    }
}
