use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fem::ScalarField;
use crate::linalg::{self, matvec, solve_rank_one, CholeskyFactor, Factor, Sparse};
use crate::pde::{PdeContext, SolveResult};

/// Which linearized operator to analyze.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Linearization {
    /// -Delta phi - lambda rho (phi - <phi>_rho), the mean field
    /// linearization with its nonlocal rank-one projector.
    MeanField,
    /// -Delta phi - eps^2 h e^u phi.
    Gelfand,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    pub k: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { k: 6, tol: 1e-8, max_iters: 300 }
    }
}

/// The k smallest eigenvalues (ascending) of the generalized symmetric
/// problem A phi = mu M phi for the requested linearization.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub eigenfield: ScalarField,
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl SpectrumReport {
    pub fn min_eig(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// Assembled operator A = K - W (+ c v v^T), with the shift s making
/// A + s M positive definite.
pub(crate) struct Operator {
    pub a0: Sparse, // K - W
    pub rank_one: Option<(f64, Vec<f64>)>,
    pub shift: f64,
}

pub(crate) fn build_operator(
    ctx: &PdeContext,
    state: &SolveResult,
    which: Linearization,
) -> Result<Operator> {
    let fem = &ctx.fem;
    match which {
        Linearization::Gelfand => {
            let eps = state
                .eps()
                .ok_or_else(|| Error::InvalidArg("state was not solved in eps".into()))?;
            let mut w_quad = ctx.h_exp_u_quad(&fem.restrict(&state.u.values));
            let mut wmax = 0.0f64;
            for row in w_quad.iter_mut() {
                for v in row.iter_mut() {
                    *v *= eps * eps;
                    wmax = wmax.max(*v);
                }
            }
            let w = fem.weighted_mass(&w_quad)?;
            let mut a0 = fem.stiffness.clone();
            linalg::add_scaled_same_pattern(&mut a0, &w, -1.0);
            Ok(Operator { a0, rank_one: None, shift: wmax + 1.0 })
        }
        Linearization::MeanField => {
            let lambda = state.lambda;
            // rho = h e^{u_tilde}, unit mass
            let rho_quad = {
                let mut q = ctx.h_exp_u_quad(&fem.restrict(&state.u.values));
                for row in q.iter_mut() {
                    for v in row.iter_mut() {
                        *v /= state.exp_mass;
                    }
                }
                q
            };
            let mut rho_max = 0.0f64;
            for row in &rho_quad {
                for &v in row {
                    rho_max = rho_max.max(v);
                }
            }
            let w = fem.weighted_mass(&rho_quad)?;
            let m_vec = fem.weighted_load(&rho_quad);
            let mut a0 = fem.stiffness.clone();
            linalg::add_scaled_same_pattern(&mut a0, &w, -lambda);
            let shift = if lambda > 0.0 { lambda * rho_max + 1.0 } else { 1.0 };
            Ok(Operator { a0, rank_one: Some((lambda, m_vec)), shift })
        }
    }
}

impl Operator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = matvec(&self.a0, x);
        if let Some((c, v)) = &self.rank_one {
            let s = c * linalg::dot(v, x);
            linalg::axpy(&mut y, s, v);
        }
        y
    }
}

/// Bottom of the spectrum by shift-invert Lanczos on (A + s M)^{-1} M in
/// the M inner product; A + s M is positive definite by construction of s.
pub fn linearized_spectrum(
    ctx: &PdeContext,
    state: &SolveResult,
    which: Linearization,
    opts: SpectrumOptions,
) -> Result<SpectrumReport> {
    let fem = &ctx.fem;
    let op = build_operator(ctx, state, which)?;
    let n = fem.num_interior();
    let k = opts.k.min(n);

    // C0 = A0 + s M (sparse SPD part)
    let mut c0 = op.a0.clone();
    let m_pattern = {
        // mass has a different (same) pattern than stiffness; rebuild on the
        // stiffness pattern via per-triangle assembly would be overkill --
        // the mass matrix shares the stiffness support exactly.
        &fem.mass
    };
    linalg::add_scaled_same_pattern(&mut c0, m_pattern, op.shift);
    let chol = CholeskyFactor::new(&c0)?;
    let apply_c_inv = |rhs: &[f64]| -> Result<Vec<f64>> {
        match &op.rank_one {
            Some((c, v)) => solve_rank_one(&chol, *c, v, rhs),
            None => Ok(chol.solve_vec(rhs)),
        }
    };

    let m_inner = |x: &[f64], y: &[f64]| linalg::dot(x, &matvec(&fem.mass, y));

    // deterministic start vector
    let mut v0: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 + 1.0) * 0.618033988749895;
            (t - t.floor()) - 0.5 + 1e-3
        })
        .collect();
    let nrm = m_inner(&v0, &v0).sqrt();
    for v in v0.iter_mut() {
        *v /= nrm;
    }

    let mut basis: Vec<Vec<f64>> = vec![v0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let max_iters = opts.max_iters.min(n);
    let mut theta: Vec<f64> = Vec::new();
    let mut ritz_y: DMatrix<f64> = DMatrix::zeros(0, 0);
    let mut converged = false;

    for j in 0..max_iters {
        let mv = matvec(&fem.mass, &basis[j]);
        let mut w = apply_c_inv(&mv)?;
        let alpha = m_inner(&w, &basis[j]);
        alphas.push(alpha);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for vi in &basis {
                let c = m_inner(&w, vi);
                linalg::axpy(&mut w, -c, vi);
            }
        }
        let beta = m_inner(&w, &w).sqrt();
        let done = beta < 1e-14 || j + 1 == max_iters;
        if !done {
            betas.push(beta);
            for v in w.iter_mut() {
                *v /= beta;
            }
            basis.push(w);
        }

        let steps = alphas.len();
        if steps >= k && (done || steps % 5 == 0) {
            let mut t = DMatrix::zeros(steps, steps);
            for i in 0..steps {
                t[(i, i)] = alphas[i];
                if i + 1 < steps {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..steps).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let top: Vec<usize> = order.into_iter().take(k).collect();
            theta = top.iter().map(|&i| eig.eigenvalues[i]).collect();
            ritz_y = DMatrix::from_fn(steps, k, |r, c| eig.eigenvectors[(r, top[c])]);
            let last_beta = if done { 0.0 } else { betas[steps - 1] };
            let ok = (0..k).all(|c| {
                let bound = (last_beta * ritz_y[(steps - 1, c)]).abs();
                bound <= opts.tol.max(1e-12) * theta[c].abs().max(1e-300)
            });
            if ok {
                converged = true;
                break;
            }
            if done {
                break;
            }
        }
        if done && steps < k {
            break;
        }
    }

    if theta.is_empty() {
        return Err(Error::Eigen("Lanczos produced no Ritz values".into()));
    }
    // theta (descending) -> mu = 1/theta - s (ascending)
    let mus: Vec<f64> = theta.iter().map(|&t| 1.0 / t - op.shift).collect();
    // Ritz vectors in original coordinates.
    let steps = ritz_y.nrows();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(mus.len());
    for c in 0..mus.len() {
        let mut x = vec![0.0; n];
        for r in 0..steps {
            linalg::axpy(&mut x, ritz_y[(r, c)], &basis[r]);
        }
        vectors.push(x);
    }
    // true residuals ||A x - mu M x|| / ||x||_M
    let mut residuals = Vec::with_capacity(mus.len());
    for (c, mu) in mus.iter().enumerate() {
        let x = &vectors[c];
        let mut r = op.apply(x);
        let mx = matvec(&fem.mass, x);
        linalg::axpy(&mut r, -mu, &mx);
        residuals.push(linalg::norm(&r) / m_inner(x, x).sqrt().max(1e-300));
    }
    // ensure ascending order in mu
    let mut order: Vec<usize> = (0..mus.len()).collect();
    order.sort_by(|&a, &b| mus[a].total_cmp(&mus[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| mus[i]).collect();
    let residuals: Vec<f64> = order.iter().map(|&i| residuals[i]).collect();
    let bottom = fem.scatter(&vectors[order[0]], 0.0);

    Ok(SpectrumReport {
        eigenvalues,
        eigenfield: ScalarField::new(fem.mesh.clone(), bottom)?,
        residuals,
        converged,
    })
}

/// Dense reference for small meshes: assembles A and M densely and solves
/// the generalized problem directly. Test oracle only.
pub fn dense_spectrum(
    ctx: &PdeContext,
    state: &SolveResult,
    which: Linearization,
    k: usize,
) -> Result<Vec<f64>> {
    let fem = &ctx.fem;
    let n = fem.num_interior();
    if n > 4000 {
        return Err(Error::InvalidArg(format!("dense oracle limited to 4000 dofs, got {n}")));
    }
    let op = build_operator(ctx, state, which)?;
    let mut a = sparse_to_dense(&op.a0);
    if let Some((c, v)) = &op.rank_one {
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] += c * v[i] * v[j];
            }
        }
    }
    let m = sparse_to_dense(&fem.mass);
    let (vals, _) = linalg::dense_generalized_eig(&a, &m)?;
    Ok(vals.into_iter().take(k).collect())
}

fn sparse_to_dense(s: &Sparse) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(s.nrows(), s.ncols());
    let sym = s.symbolic();
    let col_ptr = sym.col_ptr();
    let row_idx = sym.row_idx();
    let val = s.val();
    for col in 0..s.ncols() {
        for p in col_ptr[col]..col_ptr[col + 1] {
            d[(row_idx[p], col)] += val[p];
        }
    }
    d
}
