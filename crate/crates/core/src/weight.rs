//! Weights h = hhat * exp(-4 pi sum_i alpha_i G(., p_i)) with a smooth
//! positive hhat given by a small expression grammar (constants,
//! coordinates, sums, products, integer powers, exp).

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fem::Fem;
use crate::geometry::Point;
use crate::green::GreenOracle;
use crate::stencil;

/// Second-order jet: value, gradient and Hessian entries.
#[derive(Debug, Clone, Copy)]
struct Jet {
    v: f64,
    dx: f64,
    dy: f64,
    dxx: f64,
    dxy: f64,
    dyy: f64,
}

impl Jet {
    fn constant(c: f64) -> Jet {
        Jet { v: c, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
    }

    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }

    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }

    fn exp(self) -> Jet {
        let e = self.v.exp();
        Jet {
            v: e,
            dx: e * self.dx,
            dy: e * self.dy,
            dxx: e * (self.dx * self.dx + self.dxx),
            dxy: e * (self.dx * self.dy + self.dxy),
            dyy: e * (self.dy * self.dy + self.dyy),
        }
    }

    fn neg(self) -> Jet {
        Jet {
            v: -self.v,
            dx: -self.dx,
            dy: -self.dy,
            dxx: -self.dxx,
            dxy: -self.dxy,
            dyy: -self.dyy,
        }
    }
}

/// Expression for the smooth factor of the weight.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Const(f64),
    X,
    Y,
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    fn jet(&self, p: Point) -> Jet {
        match self {
            Expr::Const(c) => Jet::constant(*c),
            Expr::X => Jet { v: p.x, dx: 1.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 },
            Expr::Y => Jet { v: p.y, dx: 0.0, dy: 1.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 },
            Expr::Add(terms) => terms
                .iter()
                .map(|t| t.jet(p))
                .fold(Jet::constant(0.0), Jet::add),
            Expr::Mul(factors) => factors
                .iter()
                .map(|t| t.jet(p))
                .fold(Jet::constant(1.0), Jet::mul),
            Expr::Pow(base, k) => {
                let b = base.jet(p);
                let mut acc = Jet::constant(1.0);
                for _ in 0..*k {
                    acc = acc.mul(b);
                }
                acc
            }
            Expr::Exp(inner) => inner.jet(p).exp(),
            Expr::Neg(inner) => inner.jet(p).neg(),
        }
    }

    pub fn eval(&self, p: Point) -> f64 {
        self.jet(p).v
    }

    /// Strict JSON parse. Accepts "x", "y", numbers, and single-key objects
    /// {"const":c}, {"add":[..]}, {"mul":[..]}, {"pow":[e,k]}, {"exp":e},
    /// {"neg":e}.
    pub fn from_json(v: &Value) -> Result<Expr> {
        match v {
            Value::String(s) if s == "x" => Ok(Expr::X),
            Value::String(s) if s == "y" => Ok(Expr::Y),
            Value::Number(n) => Ok(Expr::Const(
                n.as_f64().ok_or_else(|| Error::InvalidArg("bad number".into()))?,
            )),
            Value::Object(map) if map.len() == 1 => {
                let (key, inner) = map.iter().next().unwrap();
                match key.as_str() {
                    "const" => Ok(Expr::Const(inner.as_f64().ok_or_else(|| {
                        Error::InvalidArg("const expects a number".into())
                    })?)),
                    "add" | "mul" => {
                        let arr = inner.as_array().ok_or_else(|| {
                            Error::InvalidArg(format!("{key} expects an array"))
                        })?;
                        let parts = arr.iter().map(Expr::from_json).collect::<Result<Vec<_>>>()?;
                        if parts.is_empty() {
                            return Err(Error::InvalidArg(format!("{key} needs operands")));
                        }
                        Ok(if key == "add" { Expr::Add(parts) } else { Expr::Mul(parts) })
                    }
                    "pow" => {
                        let arr = inner
                            .as_array()
                            .filter(|a| a.len() == 2)
                            .ok_or_else(|| Error::InvalidArg("pow expects [expr, k]".into()))?;
                        let base = Expr::from_json(&arr[0])?;
                        let k = arr[1]
                            .as_u64()
                            .ok_or_else(|| Error::InvalidArg("pow exponent must be a non-negative integer".into()))?;
                        Ok(Expr::Pow(Box::new(base), k as u32))
                    }
                    "exp" => Ok(Expr::Exp(Box::new(Expr::from_json(inner)?))),
                    "neg" => Ok(Expr::Neg(Box::new(Expr::from_json(inner)?))),
                    other => Err(Error::InvalidArg(format!("unknown expression node {other:?}"))),
                }
            }
            other => Err(Error::InvalidArg(format!("cannot parse expression from {other}"))),
        }
    }
}

/// Value, gradient of log h, and Laplacian of log h at one point.
#[derive(Debug, Clone, Copy)]
pub struct WeightValue {
    pub h: f64,
    pub grad_log_h: Point,
    pub laplace_log_h: f64,
}

/// The weight h(x) = hhat(x) exp(-4 pi sum_i alpha_i G(x, p_i)).
#[derive(Debug, Clone, Serialize)]
pub struct WeightSpec {
    pub hhat: Expr,
    pub singular_points: Vec<[f64; 2]>,
    pub alphas: Vec<f64>,
}

impl WeightSpec {
    pub fn constant() -> WeightSpec {
        WeightSpec { hhat: Expr::one(), singular_points: Vec::new(), alphas: Vec::new() }
    }

    pub fn smooth(hhat: Expr) -> WeightSpec {
        WeightSpec { hhat, singular_points: Vec::new(), alphas: Vec::new() }
    }

    /// True when h is identically one.
    pub fn is_trivial(&self) -> bool {
        self.singular_points.is_empty() && self.hhat == Expr::one()
    }

    pub fn from_json(text: &str) -> Result<WeightSpec> {
        let v: Value = serde_json::from_str(text)?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::InvalidArg("weight spec must be a JSON object".into()))?;
        for key in obj.keys() {
            if !["hhat", "singular_points", "alphas"].contains(&key.as_str()) {
                return Err(Error::InvalidArg(format!("unknown key {key:?} in weight spec")));
            }
        }
        let hhat = match obj.get("hhat") {
            Some(e) => Expr::from_json(e)?,
            None => Expr::one(),
        };
        let singular_points: Vec<[f64; 2]> = match obj.get("singular_points") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => Vec::new(),
        };
        let alphas: Vec<f64> = match obj.get("alphas") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => Vec::new(),
        };
        let spec = WeightSpec { hhat, singular_points, alphas };
        spec.validate_shape()?;
        Ok(spec)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.singular_points.len() != self.alphas.len() {
            return Err(Error::InvalidArg(format!(
                "{} singular points but {} alphas",
                self.singular_points.len(),
                self.alphas.len()
            )));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a > -1.0)) {
            return Err(Error::InvalidArg(format!("alpha must be > -1, got {a}")));
        }
        for (i, p) in self.singular_points.iter().enumerate() {
            for q in self.singular_points.iter().skip(i + 1) {
                if (p[0] - q[0]).hypot(p[1] - q[1]) < 1e-12 {
                    return Err(Error::InvalidArg("singular points must be distinct".into()));
                }
            }
        }
        Ok(())
    }

    /// Checks hhat positivity on the mesh nodes and that singular points are
    /// interior.
    pub fn validate_on(&self, fem: &Fem) -> Result<()> {
        self.validate_shape()?;
        for p in fem.mesh.nodes() {
            if !(self.hhat.eval(*p) > 0.0) {
                return Err(Error::InvalidArg(format!(
                    "hhat must be positive on the domain; value {} at ({}, {})",
                    self.hhat.eval(*p),
                    p.x,
                    p.y
                )));
            }
        }
        for p in &self.singular_points {
            let pt = Point::new(p[0], p[1]);
            if fem.locator.locate(&fem.mesh, pt).is_none()
                || fem.mesh.boundary_distance(pt) < 2.0 * fem.mesh.h_max()
            {
                return Err(Error::OutOfDomain(pt.x, pt.y));
            }
        }
        Ok(())
    }

    pub fn min_singular_distance(&self, x: Point) -> f64 {
        self.singular_points
            .iter()
            .map(|p| x.dist(Point::new(p[0], p[1])))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn log_h(&self, oracle: &GreenOracle, x: Point) -> Result<f64> {
        let mut log_h = self.hhat.eval(x).ln();
        for (p, &alpha) in self.singular_points.iter().zip(&self.alphas) {
            let pt = Point::new(p[0], p[1]);
            log_h -= 4.0 * std::f64::consts::PI * alpha * oracle.green(pt, x)?;
        }
        Ok(log_h)
    }

    /// h, grad log h and Laplace log h.
    ///
    /// The gradient of the Green part is differenced numerically; its
    /// Laplacian vanishes identically away from the singular points, so
    /// Laplace log h reduces to the analytic Laplace log hhat.
    pub fn eval(&self, oracle: &GreenOracle, x: Point) -> Result<WeightValue> {
        if self.min_singular_distance(x) < 1e-9 {
            return Err(Error::SingularPoint(x.x, x.y));
        }
        let jet = self.hhat.jet(x);
        if !(jet.v > 0.0) {
            return Err(Error::InvalidArg(format!("hhat not positive at ({}, {})", x.x, x.y)));
        }
        // log hhat derivatives from the jet
        let (v, vx, vy) = (jet.v, jet.dx, jet.dy);
        let mut grad = Point::new(vx / v, vy / v);
        let laplace = (jet.dxx + jet.dyy) / v - (vx * vx + vy * vy) / (v * v);
        let mut h = v;
        if !self.singular_points.is_empty() {
            let delta = oracle.fd_step();
            let mut green_sum = |p: &[f64]| -> Result<f64> {
                let xx = Point::new(p[0], p[1]);
                let mut s = 0.0;
                for (pi, &alpha) in self.singular_points.iter().zip(&self.alphas) {
                    s -= 4.0 * std::f64::consts::PI
                        * alpha
                        * oracle.green(Point::new(pi[0], pi[1]), xx)?;
                }
                Ok(s)
            };
            let g = stencil::gradient(&mut green_sum, &[x.x, x.y], delta)?;
            grad = grad + Point::new(g[0], g[1]);
            h *= green_sum(&[x.x, x.y])?.exp();
        }
        Ok(WeightValue { h, grad_log_h: grad, laplace_log_h: laplace })
    }

    /// log h at every quadrature point of the mesh (used by assembly).
    pub fn log_h_at_quad(&self, fem: &Fem, oracle: Option<&GreenOracle>) -> Result<Vec<Vec<f64>>> {
        if self.is_trivial() {
            return Ok(fem.map_at_quad(|_, _, _| 0.0));
        }
        // Interpolate each correction field once; the log term is analytic.
        let mut corrections = Vec::new();
        if !self.singular_points.is_empty() {
            let oracle = oracle.ok_or_else(|| {
                Error::InvalidArg("weights with singular points need a Green oracle".into())
            })?;
            for p in &self.singular_points {
                corrections.push(oracle.correction(Point::new(p[0], p[1]))?);
            }
        }
        let values = fem.map_at_quad(|tri, phi, p| {
            let mut log_h = self.hhat.eval(p).ln();
            for (k, (ps, &alpha)) in self.singular_points.iter().zip(&self.alphas).enumerate() {
                let source = Point::new(ps[0], ps[1]);
                let corr = &corrections[k];
                let hval = phi[0] * corr[tri[0]] + phi[1] * corr[tri[1]] + phi[2] * corr[tri[2]];
                let d = p.dist(source).max(1e-300);
                let g = -d.ln() / (2.0 * std::f64::consts::PI) + hval;
                log_h -= 4.0 * std::f64::consts::PI * alpha * g;
            }
            log_h
        });
        Ok(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jets_differentiate_expressions() {
        // hhat = exp(x^2 + y^2): grad log h = (2x, 2y), Laplace log h = 4
        let e = Expr::Exp(Box::new(Expr::Add(vec![
            Expr::Pow(Box::new(Expr::X), 2),
            Expr::Pow(Box::new(Expr::Y), 2),
        ])));
        let p = Point::new(0.3, -0.2);
        let jet = e.jet(p);
        let expect = (p.norm_sq()).exp();
        assert!((jet.v - expect).abs() < 1e-14);
        assert!((jet.dx - 2.0 * p.x * expect).abs() < 1e-13);
        let spec = WeightSpec::smooth(e);
        // grad log h and Laplace log h through eval's analytic path
        let (v, dxx, dyy) = (jet.v, jet.dxx, jet.dyy);
        let laplace_log = (dxx + dyy) / v - (jet.dx * jet.dx + jet.dy * jet.dy) / (v * v);
        assert!((laplace_log - 4.0).abs() < 1e-12);
        assert!(!spec.is_trivial());
    }

    #[test]
    fn parses_strict_json() {
        let spec = WeightSpec::from_json(r#"{"hhat": {"exp": "x"}}"#).unwrap();
        assert_eq!(spec.hhat, Expr::Exp(Box::new(Expr::X)));
        assert!(WeightSpec::from_json(r#"{"hhat": 1.0, "extra": 2}"#).is_err());
        assert!(WeightSpec::from_json(r#"{"alphas": [0.5]}"#).is_err());
        assert!(
            WeightSpec::from_json(r#"{"singular_points": [[0,0]], "alphas": [-1.5]}"#).is_err()
        );
        let ok = WeightSpec::from_json(r#"{"singular_points": [[0,0]], "alphas": [0.5]}"#).unwrap();
        assert_eq!(ok.alphas, vec![0.5]);
        assert!(WeightSpec::from_json(r#"{"hhat": {"pow": ["x", -1]}}"#).is_err());
    }
}
