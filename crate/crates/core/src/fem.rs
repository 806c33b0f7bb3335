//! Piecewise-linear finite elements on a triangulation: assembly, nodal
//! fields and quadrature of integrals.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Locator, Mesh, Point, Quadrature};
use crate::linalg::{sparse_from_triplets, Sparse, Trip};

/// Nodal values of a function on a mesh (P1 interpolation).
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub mesh: Arc<Mesh>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::InvalidArg(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        Ok(ScalarField { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> ScalarField {
        let n = mesh.num_nodes();
        ScalarField { mesh, values: vec![0.0; n] }
    }

    pub fn from_fn(mesh: Arc<Mesh>, f: impl Fn(Point) -> f64) -> ScalarField {
        let values = mesh.nodes().iter().map(|&p| f(p)).collect();
        ScalarField { mesh, values }
    }

    pub fn eval(&self, locator: &Locator, x: Point) -> Option<f64> {
        let (t, bary) = locator.locate(&self.mesh, x)?;
        let [a, b, c] = self.mesh.triangles()[t];
        Some(bary[0] * self.values[a] + bary[1] * self.values[b] + bary[2] * self.values[c])
    }

    pub fn max(&self) -> (usize, f64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }
}

/// Gradient of the P1 basis functions of triangle `t`, and its area.
pub fn p1_gradients(mesh: &Mesh, t: usize) -> ([Point; 3], f64) {
    let [a, b, c] = mesh.triangles()[t];
    let (pa, pb, pc) = (mesh.node(a), mesh.node(b), mesh.node(c));
    let area2 = (pb - pa).cross(pc - pa);
    let grad = |p: Point, q: Point| Point::new(p.y - q.y, q.x - p.x).scale(1.0 / area2);
    ([grad(pb, pc), grad(pc, pa), grad(pa, pb)], 0.5 * area2)
}

/// FEM workspace for one mesh: index maps, stiffness and mass matrices and
/// a point locator. Immutable and shareable.
pub struct Fem {
    pub mesh: Arc<Mesh>,
    pub locator: Locator,
    pub quad: Quadrature,
    /// Interior node ids (ascending).
    pub interior: Vec<usize>,
    /// node id -> interior index.
    pub interior_of: Vec<Option<usize>>,
    /// Stiffness on all nodes.
    pub stiffness_full: Sparse,
    /// Stiffness restricted to interior x interior.
    pub stiffness: Sparse,
    /// Consistent mass restricted to interior x interior.
    pub mass: Sparse,
}

impl Fem {
    pub fn new(mesh: Arc<Mesh>) -> Result<Fem> {
        let quad = Quadrature::with_order(4)?;
        let locator = Locator::build(&mesh);
        let n = mesh.num_nodes();
        let mut interior_of = vec![None; n];
        let mut interior = Vec::new();
        for i in 0..n {
            if !mesh.is_boundary(i) {
                interior_of[i] = Some(interior.len());
                interior.push(i);
            }
        }

        let mut full = Vec::new();
        let mut int_k = Vec::new();
        let mut int_m = Vec::new();
        for t in 0..mesh.triangles().len() {
            let tri = mesh.triangles()[t];
            let (grads, area) = p1_gradients(&mesh, t);
            for i in 0..3 {
                for j in 0..3 {
                    let kij = area * grads[i].dot(grads[j]);
                    full.push(Trip::new(tri[i], tri[j], kij));
                    if let (Some(ii), Some(jj)) = (interior_of[tri[i]], interior_of[tri[j]]) {
                        int_k.push(Trip::new(ii, jj, kij));
                        let mij = area / if i == j { 6.0 } else { 12.0 };
                        int_m.push(Trip::new(ii, jj, mij));
                    }
                }
            }
        }
        let stiffness_full = sparse_from_triplets(n, n, &full)?;
        let ni = interior.len();
        let stiffness = sparse_from_triplets(ni, ni, &int_k)?;
        let mass = sparse_from_triplets(ni, ni, &int_m)?;
        Ok(Fem {
            mesh,
            locator,
            quad,
            interior,
            interior_of,
            stiffness_full,
            stiffness,
            mass,
        })
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    /// Scatter interior coefficients into a full nodal vector, boundary
    /// entries filled with `boundary_value`.
    pub fn scatter(&self, interior_values: &[f64], boundary_value: f64) -> Vec<f64> {
        let mut full = vec![boundary_value; self.mesh.num_nodes()];
        for (k, &node) in self.interior.iter().enumerate() {
            full[node] = interior_values[k];
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.interior.iter().map(|&node| full[node]).collect()
    }

    /// Physical coordinates of the quadrature points of triangle `t`.
    pub fn quad_points(&self, t: usize) -> impl Iterator<Item = (Point, f64)> + '_ {
        let [a, b, c] = self.mesh.triangles()[t];
        let (pa, pb, pc) = (self.mesh.node(a), self.mesh.node(b), self.mesh.node(c));
        let area2 = (pb - pa).cross(pc - pa);
        self.quad
            .points
            .iter()
            .zip(&self.quad.weights)
            .map(move |(&(xi, eta), &w)| {
                let p = pa + (pb - pa).scale(xi) + (pc - pa).scale(eta);
                (p, w * area2)
            })
    }

    /// Weighted mass matrix on interior nodes: W_ij = int w(x) phi_i phi_j,
    /// with `w` given per triangle and quadrature point.
    pub fn weighted_mass(&self, w_at_quad: &[Vec<f64>]) -> Result<Sparse> {
        let ni = self.interior.len();
        let mut trips = Vec::new();
        for t in 0..self.mesh.triangles().len() {
            let tri = self.mesh.triangles()[t];
            let [a, b, c] = tri;
            let (pa, pb, pc) = (self.mesh.node(a), self.mesh.node(b), self.mesh.node(c));
            let area2 = (pb - pa).cross(pc - pa);
            for (q, (&(xi, eta), &wq)) in
                self.quad.points.iter().zip(&self.quad.weights).enumerate()
            {
                let phi = [1.0 - xi - eta, xi, eta];
                let coeff = w_at_quad[t][q] * wq * area2;
                for i in 0..3 {
                    for j in 0..3 {
                        if let (Some(ii), Some(jj)) =
                            (self.interior_of[tri[i]], self.interior_of[tri[j]])
                        {
                            trips.push(Trip::new(ii, jj, coeff * phi[i] * phi[j]));
                        }
                    }
                }
            }
        }
        sparse_from_triplets(ni, ni, &trips)
    }

    /// Load vector on interior nodes: L_i = int w(x) phi_i.
    pub fn weighted_load(&self, w_at_quad: &[Vec<f64>]) -> Vec<f64> {
        let mut load = vec![0.0; self.interior.len()];
        for t in 0..self.mesh.triangles().len() {
            let tri = self.mesh.triangles()[t];
            let [a, b, c] = tri;
            let (pa, pb, pc) = (self.mesh.node(a), self.mesh.node(b), self.mesh.node(c));
            let area2 = (pb - pa).cross(pc - pa);
            for (q, (&(xi, eta), &wq)) in
                self.quad.points.iter().zip(&self.quad.weights).enumerate()
            {
                let phi = [1.0 - xi - eta, xi, eta];
                let coeff = w_at_quad[t][q] * wq * area2;
                for i in 0..3 {
                    if let Some(ii) = self.interior_of[tri[i]] {
                        load[ii] += coeff * phi[i];
                    }
                }
            }
        }
        load
    }

    /// Quadrature of int w(x) dx for per-quad-point values.
    pub fn integrate_quad_values(&self, w_at_quad: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for t in 0..self.mesh.triangles().len() {
            let [a, b, c] = self.mesh.triangles()[t];
            let (pa, pb, pc) = (self.mesh.node(a), self.mesh.node(b), self.mesh.node(c));
            let area2 = (pb - pa).cross(pc - pa);
            for (q, &wq) in self.quad.weights.iter().enumerate() {
                total += w_at_quad[t][q] * wq * area2;
            }
        }
        total
    }

    /// Values of a nodal field at each quadrature point of each triangle.
    pub fn field_at_quad(&self, nodal: &[f64]) -> Vec<Vec<f64>> {
        self.map_at_quad(|tri, phi, _| {
            phi[0] * nodal[tri[0]] + phi[1] * nodal[tri[1]] + phi[2] * nodal[tri[2]]
        })
    }

    /// Evaluate an arbitrary map at every quadrature point.
    pub fn map_at_quad(
        &self,
        f: impl Fn([usize; 3], [f64; 3], Point) -> f64,
    ) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.mesh.triangles().len());
        for t in 0..self.mesh.triangles().len() {
            let tri = self.mesh.triangles()[t];
            let [a, b, c] = tri;
            let (pa, pb, pc) = (self.mesh.node(a), self.mesh.node(b), self.mesh.node(c));
            let mut vals = Vec::with_capacity(self.quad.points.len());
            for &(xi, eta) in &self.quad.points {
                let phi = [1.0 - xi - eta, xi, eta];
                let p = pa + (pb - pa).scale(xi) + (pc - pa).scale(eta);
                vals.push(f(tri, phi, p));
            }
            out.push(vals);
        }
        out
    }
}

/// Quadrature approximation of the integral of a nodal field or pointwise
/// function over the meshed domain.
pub fn integrate(mesh: &Mesh, quad: &Quadrature, f: &Integrand) -> Result<f64> {
    if let Integrand::Field(values) = f {
        if values.len() != mesh.num_nodes() {
            return Err(Error::InvalidArg(format!(
                "field length {} does not match node count {}",
                values.len(),
                mesh.num_nodes()
            )));
        }
    }
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        let [a, b, c] = mesh.triangles()[t];
        let (pa, pb, pc) = (mesh.node(a), mesh.node(b), mesh.node(c));
        let area2 = (pb - pa).cross(pc - pa);
        for (&(xi, eta), &w) in quad.points.iter().zip(&quad.weights) {
            let value = match f {
                Integrand::Field(values) => {
                    (1.0 - xi - eta) * values[a] + xi * values[b] + eta * values[c]
                }
                Integrand::Function(func) => {
                    func(pa + (pb - pa).scale(xi) + (pc - pa).scale(eta))
                }
            };
            total += w * area2 * value;
        }
    }
    Ok(total)
}

pub enum Integrand<'a> {
    Field(&'a [f64]),
    Function(&'a dyn Fn(Point) -> f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, Domain};
    use crate::linalg::{matvec, CholeskyFactor, Factor};

    #[test]
    fn integrate_constants_and_quadratics() {
        let mesh = build_mesh(&Domain::rectangle(1.0, 1.0).unwrap(), 0.2).unwrap();
        let quad = Quadrature::with_order(4).unwrap();
        let one = integrate(&mesh, &quad, &Integrand::Function(&|_| 1.0)).unwrap();
        assert!((one - 1.0).abs() < 1e-13);
        let zero_field = vec![0.0; mesh.num_nodes()];
        let z = integrate(&mesh, &quad, &Integrand::Field(&zero_field)).unwrap();
        assert_eq!(z, 0.0);

        let disk = build_mesh(&Domain::disk(1.0).unwrap(), 0.02).unwrap();
        let r2 = integrate(&disk, &quad, &Integrand::Function(&|p| p.norm_sq())).unwrap();
        assert!(
            (r2 - std::f64::consts::FRAC_PI_2).abs() < 1e-3,
            "int r^2 = {r2}"
        );
    }

    #[test]
    fn integrate_rejects_mismatched_field() {
        let mesh = build_mesh(&Domain::rectangle(1.0, 1.0).unwrap(), 0.3).unwrap();
        let quad = Quadrature::with_order(2).unwrap();
        let short = vec![1.0; 3];
        assert!(integrate(&mesh, &quad, &Integrand::Field(&short)).is_err());
    }

    /// -Laplace u = 1 on the unit disk has u = (1 - r^2)/4; the integral of
    /// u is pi/8.
    #[test]
    fn poisson_torsion_function_on_disk() {
        let mesh = Arc::new(build_mesh(&Domain::disk(1.0).unwrap(), 0.05).unwrap());
        let fem = Fem::new(mesh.clone()).unwrap();
        let ones = fem.map_at_quad(|_, _, _| 1.0);
        let load = fem.weighted_load(&ones);
        let factor = CholeskyFactor::new(&fem.stiffness).unwrap();
        let u = factor.solve_vec(&load);
        let full = fem.scatter(&u, 0.0);
        // center value 1/4
        let center = full[0];
        assert!((center - 0.25).abs() < 2e-3, "u(0) = {center}");
        let quad = Quadrature::with_order(4).unwrap();
        let total = integrate(&mesh, &quad, &Integrand::Field(&full)).unwrap();
        assert!(
            (total - std::f64::consts::PI / 8.0).abs() < 2e-3,
            "int u = {total}"
        );
        // residual check
        let r = matvec(&fem.stiffness, &u);
        for (ri, li) in r.iter().zip(&load) {
            assert!((ri - li).abs() < 1e-10);
        }
    }
}
