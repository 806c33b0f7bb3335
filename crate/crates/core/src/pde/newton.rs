use crate::error::Result;
use crate::fem::ScalarField;
use crate::linalg::{self, matvec, solve_rank_one, Factor, LuFactor};
use crate::pde::{Param, PdeContext, SolveResult};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iters: 50, max_backtracks: 30 }
    }
}

struct ExpTerms {
    w_quad: Vec<Vec<f64>>,
    mass: f64,
    load: Vec<f64>,
}

fn exp_terms(ctx: &PdeContext, u_int: &[f64]) -> ExpTerms {
    let w_quad = ctx.h_exp_u_quad(u_int);
    let mass = ctx.fem.integrate_quad_values(&w_quad);
    let load = ctx.fem.weighted_load(&w_quad);
    ExpTerms { w_quad, mass, load }
}

/// Newton solve of the mean field problem
///   -Delta u = lambda h e^u / int h e^u,  u = 0 on the boundary.
///
/// The normalization makes the Jacobian a sparse operator plus an exact
/// rank-one correction, inverted with the Sherman-Morrison formula; freezing
/// the correction would ruin quadratic convergence near concentration.
pub fn solve_mean_field(
    ctx: &PdeContext,
    lambda: f64,
    guess: &ScalarField,
    opts: NewtonOptions,
) -> Result<SolveResult> {
    let residual = |terms: &ExpTerms, u: &[f64]| -> Vec<f64> {
        let mut f = matvec(&ctx.fem.stiffness, u);
        let scale = lambda / terms.mass;
        linalg::axpy(&mut f, -scale, &terms.load);
        f
    };
    newton_loop(ctx, guess, opts, Param::Lambda(lambda), residual, |terms| {
        let scale = lambda / terms.mass;
        let w = ctx.fem.weighted_mass(&terms.w_quad)?;
        let mut jac = ctx.fem.stiffness.clone();
        linalg::add_scaled_same_pattern(&mut jac, &w, -scale);
        let factor = LuFactor::new(&jac)?;
        let c = lambda / (terms.mass * terms.mass);
        let v = terms.load.clone();
        Ok(Box::new(move |rhs: &[f64]| solve_rank_one(&factor, c, &v, rhs)))
    })
}

/// Newton solve of the Gelfand problem -Delta u = eps^2 h e^u.
pub fn solve_gelfand(
    ctx: &PdeContext,
    eps: f64,
    guess: &ScalarField,
    opts: NewtonOptions,
) -> Result<SolveResult> {
    let eps_sq = eps * eps;
    let residual = |terms: &ExpTerms, u: &[f64]| -> Vec<f64> {
        let mut f = matvec(&ctx.fem.stiffness, u);
        linalg::axpy(&mut f, -eps_sq, &terms.load);
        f
    };
    newton_loop(ctx, guess, opts, Param::Eps(eps), residual, |terms| {
        let w = ctx.fem.weighted_mass(&terms.w_quad)?;
        let mut jac = ctx.fem.stiffness.clone();
        linalg::add_scaled_same_pattern(&mut jac, &w, -eps_sq);
        let factor = LuFactor::new(&jac)?;
        Ok(Box::new(move |rhs: &[f64]| Ok(factor.solve_vec(rhs))))
    })
}

type Solver = Box<dyn Fn(&[f64]) -> Result<Vec<f64>>>;

fn newton_loop(
    ctx: &PdeContext,
    guess: &ScalarField,
    opts: NewtonOptions,
    param: Param,
    residual: impl Fn(&ExpTerms, &[f64]) -> Vec<f64>,
    jacobian_solver: impl Fn(&ExpTerms) -> Result<Solver>,
) -> Result<SolveResult> {
    let fem = &ctx.fem;
    let mut u = fem.restrict(&guess.values);
    let mut terms = exp_terms(ctx, &u);
    let mut f = residual(&terms, &u);
    let mut fnorm = linalg::norm(&f);
    let tol = opts.tol * (1.0 + param.value().abs());
    let mut iters = 0;
    let mut converged = fnorm <= tol;

    while !converged && iters < opts.max_iters {
        iters += 1;
        let solve = jacobian_solver(&terms)?;
        let neg_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = solve(&neg_f)?;
        // Backtracking on the residual norm, halving up to max_backtracks.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = u
                .iter()
                .zip(&step)
                .map(|(ui, si)| ui + alpha * si)
                .collect();
            if trial.iter().all(|v| v.is_finite() && v.abs() < 600.0) {
                let trial_terms = exp_terms(ctx, &trial);
                let trial_f = residual(&trial_terms, &trial);
                let trial_norm = linalg::norm(&trial_f);
                if trial_norm.is_finite() && trial_norm < (1.0 - 1e-4 * alpha) * fnorm {
                    u = trial;
                    terms = trial_terms;
                    f = trial_f;
                    fnorm = trial_norm;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break; // stagnation: report the last iterate
        }
        converged = fnorm <= tol;
    }

    let full = fem.scatter(&u, 0.0);
    let log_mass = terms.mass.ln();
    let u_tilde_vals: Vec<f64> = full.iter().map(|v| v - log_mass).collect();
    let mass_check = {
        let shifted: Vec<Vec<f64>> = terms
            .w_quad
            .iter()
            .map(|row| row.iter().map(|v| v / terms.mass).collect())
            .collect();
        ctx.fem.integrate_quad_values(&shifted)
    };
    let lambda = match param {
        Param::Lambda(l) => l,
        Param::Eps(e) => e * e * terms.mass,
    };
    Ok(SolveResult {
        u: ScalarField::new(fem.mesh.clone(), full.clone())?,
        u_tilde: ScalarField::new(fem.mesh.clone(), u_tilde_vals)?,
        param,
        lambda,
        exp_mass: terms.mass,
        residual_norm: fnorm,
        newton_iters: iters,
        mass_check,
        converged,
    })
}
