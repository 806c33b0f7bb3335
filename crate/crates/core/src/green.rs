//! Dirichlet Green function of the Laplacian, its regular part and the
//! Robin function, computed by splitting off the logarithmic singularity
//! and solving for the harmonic correction with finite elements.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::Fem;
use crate::geometry::Point;
use crate::linalg::{matvec, CholeskyFactor, Factor};
use crate::stencil;

const SOURCE_QUANTUM: f64 = 1e-12;

/// Green function oracle for one mesh.
///
/// For a source y the correction field H_y solves the Laplace problem with
/// boundary data log|x - y| / (2 pi), so that
///   G(x, y) = -log|x - y| / (2 pi) + H_y(x),
/// and the regular part R(x, y) = H_y(x) is smooth through x = y.
/// Correction fields are cached per quantized source coordinate; the
/// factorization is computed once and shared.
pub struct GreenOracle {
    pub fem: Arc<Fem>,
    factor: CholeskyFactor,
    cache: Mutex<HashMap<(i64, i64), Arc<Vec<f64>>>>,
    diam: f64,
}

/// Critical point report for the Robin function.
#[derive(Debug, Clone, Serialize)]
pub struct RobinReport {
    pub x_omega: [f64; 2],
    pub gamma_max: f64,
    pub grad_norm: f64,
    pub hessian: [[f64; 2]; 2],
    pub hessian_det: f64,
    /// All distinct local maxima found (position, value), canonical first.
    #[serde(skip)]
    pub all_maxima: Vec<([f64; 2], f64)>,
}

impl GreenOracle {
    pub fn new(fem: Arc<Fem>) -> Result<GreenOracle> {
        let factor = CholeskyFactor::new(&fem.stiffness)?;
        let diam = fem.mesh.domain.diameter();
        Ok(GreenOracle { fem, factor, cache: Mutex::new(HashMap::new()), diam })
    }

    /// Finite-difference step for Robin derivatives.
    pub fn fd_step(&self) -> f64 {
        (2.0 * self.fem.mesh.h_max()).max(1e-3 * self.diam)
    }

    fn key(y: Point) -> (i64, i64) {
        ((y.x / SOURCE_QUANTUM).round() as i64, (y.y / SOURCE_QUANTUM).round() as i64)
    }

    fn require_inside(&self, y: Point) -> Result<()> {
        match self.fem.locator.locate(&self.fem.mesh, y) {
            Some(_) => Ok(()),
            None => Err(Error::OutOfDomain(y.x, y.y)),
        }
    }

    /// Nodal values of the harmonic correction H_y (including boundary).
    pub fn correction(&self, y: Point) -> Result<Arc<Vec<f64>>> {
        self.require_inside(y)?;
        let key = Self::key(y);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let mesh = &self.fem.mesh;
        let n = mesh.num_nodes();
        let mut g_full = vec![0.0; n];
        for &b in mesh.boundary_nodes() {
            let d = mesh.node(b).dist(y);
            if d <= 0.0 {
                return Err(Error::OutOfDomain(y.x, y.y));
            }
            g_full[b] = d.ln() / (2.0 * std::f64::consts::PI);
        }
        // K_II h_I = -(K g)_I lifts the boundary data.
        let kg = matvec(&self.fem.stiffness_full, &g_full);
        let rhs: Vec<f64> = self.fem.interior.iter().map(|&i| -kg[i]).collect();
        let h_int = self.factor.solve_vec(&rhs);
        let mut field = g_full;
        for (k, &node) in self.fem.interior.iter().enumerate() {
            field[node] = h_int[k];
        }
        let field = Arc::new(field);
        self.cache.lock().unwrap().insert(key, field.clone());
        Ok(field)
    }

    fn interp(&self, field: &[f64], x: Point) -> Result<f64> {
        let (t, bary) = self
            .fem
            .locator
            .locate(&self.fem.mesh, x)
            .ok_or(Error::OutOfDomain(x.x, x.y))?;
        let [a, b, c] = self.fem.mesh.triangles()[t];
        Ok(bary[0] * field[a] + bary[1] * field[b] + bary[2] * field[c])
    }

    /// G(x, y); rejects x = y (the Robin function handles the diagonal).
    pub fn green(&self, y: Point, x: Point) -> Result<f64> {
        let d = x.dist(y);
        if d < SOURCE_QUANTUM {
            return Err(Error::SingularPoint(x.x, x.y));
        }
        let h = self.correction(y)?;
        Ok(-d.ln() / (2.0 * std::f64::consts::PI) + self.interp(&h, x)?)
    }

    /// Regular part R(x, y); x = y allowed.
    pub fn regular_part(&self, y: Point, x: Point) -> Result<f64> {
        let h = self.correction(y)?;
        self.interp(&h, x)
    }

    /// Robin function gamma(x) = R(x, x).
    pub fn robin(&self, x: Point) -> Result<f64> {
        self.require_robin_margin(x)?;
        self.regular_part(x, x)
    }

    fn require_robin_margin(&self, x: Point) -> Result<()> {
        self.require_inside(x)?;
        if self.fem.mesh.boundary_distance(x) < 2.0 * self.fem.mesh.h_max() {
            return Err(Error::OutOfDomain(x.x, x.y));
        }
        Ok(())
    }

    pub fn robin_grad(&self, x: Point) -> Result<Point> {
        self.require_robin_margin(x)?;
        let delta = self.fd_step();
        let mut f = |p: &[f64]| self.regular_part(Point::new(p[0], p[1]), Point::new(p[0], p[1]));
        let g = stencil::gradient(&mut f, &[x.x, x.y], delta)?;
        Ok(Point::new(g[0], g[1]))
    }

    pub fn robin_hessian(&self, x: Point) -> Result<[[f64; 2]; 2]> {
        self.require_robin_margin(x)?;
        let delta = self.fd_step();
        let mut f = |p: &[f64]| self.regular_part(Point::new(p[0], p[1]), Point::new(p[0], p[1]));
        let h = stencil::hessian(&mut f, &[x.x, x.y], delta)?;
        Ok([[h[0][0], h[0][1]], [h[1][0], h[1][1]]])
    }

    /// Newton ascent to local maxima of the Robin function from each seed.
    ///
    /// Maxima within 1e-6 * diam of each other are merged. The canonical
    /// maximum is the one with the largest value; exact ties go to the
    /// point found from the earliest seed.
    pub fn robin_max(&self, seeds: &[Point], tol_grad: f64) -> Result<RobinReport> {
        if seeds.is_empty() {
            return Err(Error::InvalidArg("robin_max needs at least one seed".into()));
        }
        let delta = self.fd_step();
        let margin = 2.0 * self.fem.mesh.h_max();
        let mut maxima: Vec<(Point, f64, Point)> = Vec::new(); // (x, gamma, grad)
        let mut failures = Vec::new();
        for &seed in seeds {
            match self.ascend(seed, delta, tol_grad, margin) {
                Ok(Some((x, val, grad))) => {
                    let dup = maxima
                        .iter()
                        .any(|(p, _, _)| p.dist(x) < 1e-6 * self.diam.max(1.0));
                    if !dup {
                        maxima.push((x, val, grad));
                    }
                }
                Ok(None) => failures.push(seed),
                Err(e) => return Err(e),
            }
        }
        if maxima.is_empty() {
            return Err(Error::NotConverged {
                residual: f64::NAN,
                iters: failures.len(),
            });
        }
        maxima.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (x, val, grad) = maxima[0];
        let hessian = self.robin_hessian(x)?;
        let det = hessian[0][0] * hessian[1][1] - hessian[0][1] * hessian[1][0];
        Ok(RobinReport {
            x_omega: [x.x, x.y],
            gamma_max: val,
            grad_norm: grad.norm(),
            hessian,
            hessian_det: det,
            all_maxima: maxima.iter().map(|(p, v, _)| ([p.x, p.y], *v)).collect(),
        })
    }

    /// Newton ascent with gradient-ascent fallback; returns the located
    /// maximum or None on divergence from this seed.
    fn ascend(
        &self,
        seed: Point,
        delta: f64,
        tol_grad: f64,
        margin: f64,
    ) -> Result<Option<(Point, f64, Point)>> {
        let mut x = seed;
        if self.fem.mesh.boundary_distance(x) < margin {
            return Ok(None);
        }
        let mut f = |p: &[f64]| self.regular_part(Point::new(p[0], p[1]), Point::new(p[0], p[1]));
        for _ in 0..60 {
            let g = stencil::gradient(&mut f, &[x.x, x.y], delta)?;
            let gnorm = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if gnorm <= tol_grad {
                let h = stencil::hessian(&mut f, &[x.x, x.y], delta)?;
                // saddle or minimum: not a maximum, discard
                if h[0][0] + h[1][1] > 0.0 || stencil::determinant(&h) < 0.0 {
                    return Ok(None);
                }
                let val = self.robin(x)?;
                return Ok(Some((x, val, Point::new(g[0], g[1]))));
            }
            let h = stencil::hessian(&mut f, &[x.x, x.y], delta)?;
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            let neg_definite = h[0][0] < 0.0 && det > 0.0;
            let (mut sx, mut sy) = if neg_definite {
                // Newton step -H^{-1} g
                let inv = 1.0 / det;
                (
                    -inv * (h[1][1] * g[0] - h[0][1] * g[1]),
                    -inv * (-h[1][0] * g[0] + h[0][0] * g[1]),
                )
            } else {
                // ascent direction, conservative length
                let scale = (0.05 * self.diam / gnorm).min(1.0);
                (g[0] * scale, g[1] * scale)
            };
            // keep steps inside the domain
            let max_step = 0.2 * self.diam;
            let slen = (sx * sx + sy * sy).sqrt();
            if slen > max_step {
                sx *= max_step / slen;
                sy *= max_step / slen;
            }
            let mut next = Point::new(x.x + sx, x.y + sy);
            let mut backtracks = 0;
            while self.fem.mesh.boundary_distance(next) < margin
                || self.fem.locator.locate(&self.fem.mesh, next).is_none()
            {
                sx *= 0.5;
                sy *= 0.5;
                next = Point::new(x.x + sx, x.y + sy);
                backtracks += 1;
                if backtracks > 40 {
                    return Ok(None);
                }
            }
            x = next;
        }
        Ok(None)
    }
}

/// Interior seed grid over the domain bounding box.
pub fn seed_grid(fem: &Fem, per_side: usize) -> Vec<Point> {
    let mesh = &fem.mesh;
    let nodes = mesh.nodes();
    let (mut lo, mut hi) = (nodes[0], nodes[0]);
    for p in nodes {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let margin = 2.5 * mesh.h_max();
    let mut seeds = Vec::new();
    for i in 0..per_side {
        for j in 0..per_side {
            let fx = (i as f64 + 0.5) / per_side as f64;
            let fy = (j as f64 + 0.5) / per_side as f64;
            let p = Point::new(lo.x + fx * (hi.x - lo.x), lo.y + fy * (hi.y - lo.y));
            if fem.locator.locate(mesh, p).is_some() && mesh.boundary_distance(p) > margin {
                seeds.push(p);
            }
        }
    }
    seeds
}
