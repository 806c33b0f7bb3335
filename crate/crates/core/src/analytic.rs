//! Closed-form reference solutions used by the test suites: Green and Robin
//! functions of the unit disk and of rectangles, and the explicit radial
//! solution family of the exponential problem on the unit disk.
//!
//! Nothing here touches the finite element pipeline; these are independent
//! formulas evaluated directly.

use crate::geometry::Point;

/// Green function of the Dirichlet Laplacian on the disk of radius `rho`
/// centered at the origin.
pub fn disk_green(rho: f64, x: Point, y: Point) -> f64 {
    use std::f64::consts::PI;
    let d = x.dist(y);
    if y.norm() == 0.0 {
        return (rho / x.norm()).ln() / (2.0 * PI);
    }
    let y_star = y.scale(rho * rho / y.norm_sq());
    ((x.dist(y_star) * y.norm()) / (rho * d)).ln() / (2.0 * PI)
}

/// Regular part R(x,y) = G(x,y) + log|x-y| / (2 pi) on the disk.
pub fn disk_regular_part(rho: f64, x: Point, y: Point) -> f64 {
    use std::f64::consts::PI;
    if y.norm() == 0.0 {
        return (rho).ln() / (2.0 * PI);
    }
    let y_star = y.scale(rho * rho / y.norm_sq());
    ((x.dist(y_star) * y.norm()) / rho).ln() / (2.0 * PI)
}

/// Robin function of the disk: gamma(x) = log((rho^2 - |x|^2)/rho) / (2 pi).
pub fn disk_robin(rho: f64, x: Point) -> f64 {
    ((rho * rho - x.norm_sq()) / rho).ln() / (2.0 * std::f64::consts::PI)
}

pub fn disk_robin_gradient(rho: f64, x: Point) -> Point {
    let denom = std::f64::consts::PI * (rho * rho - x.norm_sq());
    x.scale(-1.0 / denom)
}

pub fn disk_robin_hessian(rho: f64, x: Point) -> [[f64; 2]; 2] {
    use std::f64::consts::PI;
    let s = rho * rho - x.norm_sq();
    let a = -1.0 / (PI * s);
    let b = -2.0 / (PI * s * s);
    [
        [a + b * x.x * x.x, b * x.x * x.y],
        [b * x.x * x.y, a + b * x.y * x.y],
    ]
}

/// Green function of the strip (0,a) x R, singular at `y`, via the closed
/// log-ratio form. Decays like exp(-pi |x2 - y2| / a).
fn strip_green(a: f64, x: Point, y: Point) -> f64 {
    use std::f64::consts::PI;
    // cosh t - cos s = 2 (sinh^2(t/2) + sin^2(s/2)), stable near the
    // singularity.
    let cosh_minus_cos = |t: f64, s: f64| {
        let sh = (0.5 * t).sinh();
        let sn = (0.5 * s).sin();
        2.0 * (sh * sh + sn * sn)
    };
    let t = PI * (x.y - y.y) / a;
    let num = cosh_minus_cos(t, PI * (x.x + y.x) / a);
    let den = cosh_minus_cos(t, PI * (x.x - y.x) / a);
    (num / den).ln() / (4.0 * PI)
}

/// Regular part of the strip Green function on the diagonal x = y.
fn strip_robin(a: f64, x1: f64) -> f64 {
    use std::f64::consts::PI;
    let num = 1.0 - (2.0 * PI * x1 / a).cos();
    (num * 2.0 * a * a / (PI * PI)).ln() / (4.0 * PI)
}

fn rect_image_count(a: f64, b: f64) -> i64 {
    // exp(-2 pi b k / a) below f64 resolution.
    ((37.0 * a) / (2.0 * std::f64::consts::PI * b)).ceil() as i64 + 1
}

/// Green function of the rectangle (0,a) x (0,b) by reflecting the strip
/// solution across y = 0 and y = b; the image series converges geometrically.
pub fn rect_green(a: f64, b: f64, x: Point, y: Point) -> f64 {
    let kmax = rect_image_count(a, b);
    let mut g = 0.0;
    for k in -kmax..=kmax {
        let shift = 2.0 * b * (k as f64);
        g += strip_green(a, x, Point::new(y.x, y.y + shift));
        g -= strip_green(a, x, Point::new(y.x, -y.y + shift));
    }
    g
}

/// Regular part of the rectangle Green function.
pub fn rect_regular_part(a: f64, b: f64, x: Point, y: Point) -> f64 {
    let direct = strip_green(a, x, y) + (x.dist(y)).ln() / (2.0 * std::f64::consts::PI);
    let kmax = rect_image_count(a, b);
    let mut r = if x.dist(y) < 1e-14 {
        strip_robin(a, x.x)
    } else {
        direct
    };
    for k in -kmax..=kmax {
        let shift = 2.0 * b * (k as f64);
        if k != 0 {
            r += strip_green(a, x, Point::new(y.x, y.y + shift));
        }
        r -= strip_green(a, x, Point::new(y.x, -y.y + shift));
    }
    r
}

pub fn rect_robin(a: f64, b: f64, x: Point) -> f64 {
    rect_regular_part(a, b, x, x)
}

/// The radial solution family of -Delta u = eps^2 e^u on the unit disk,
/// parameterized by the concentration parameter delta > 0:
///   u(r) = 2 log(1 + delta) - 2 log(1 + delta r^2),
///   eps^2 = 8 delta / (1 + delta)^2,  lambda = 8 pi delta / (1 + delta).
/// The same u solves the mean field problem at that lambda.
#[derive(Debug, Clone, Copy)]
pub struct DiskFamily {
    pub delta: f64,
}

impl DiskFamily {
    pub fn new(delta: f64) -> DiskFamily {
        assert!(delta > 0.0);
        DiskFamily { delta }
    }

    pub fn eps_sq(&self) -> f64 {
        8.0 * self.delta / ((1.0 + self.delta) * (1.0 + self.delta))
    }

    pub fn lambda(&self) -> f64 {
        8.0 * std::f64::consts::PI * self.delta / (1.0 + self.delta)
    }

    pub fn u(&self, r: f64) -> f64 {
        2.0 * (1.0 + self.delta).ln() - 2.0 * (1.0 + self.delta * r * r).ln()
    }

    /// int_disk e^u = pi (1 + delta).
    pub fn exp_mass(&self) -> f64 {
        std::f64::consts::PI * (1.0 + self.delta)
    }

    /// Energy E = (1+d) [ (1 + 1/d) log(1+d) - 1 ] / (8 pi d).
    pub fn energy(&self) -> f64 {
        use std::f64::consts::PI;
        let d = self.delta;
        if d < 1e-6 {
            // series around d = 0: E = 1/(16 pi) (1 + d/3 + ...)
            return (1.0 + d / 3.0) / (16.0 * PI);
        }
        (1.0 + d) * ((1.0 + 1.0 / d) * (1.0 + d).ln() - 1.0) / (8.0 * PI * d)
    }

    /// Entropy S = log(pi (1 + delta)) - 2 lambda E.
    pub fn entropy(&self) -> f64 {
        (std::f64::consts::PI * (1.0 + self.delta)).ln() - 2.0 * self.lambda() * self.energy()
    }

    /// Max of the translated field u - log int e^u.
    pub fn mu_max(&self) -> f64 {
        ((1.0 + self.delta) / std::f64::consts::PI).ln()
    }

    /// Normalized density mass inside the centered ball of radius r0.
    pub fn local_mass(&self, r0: f64) -> f64 {
        let d = self.delta;
        8.0 * std::f64::consts::PI * d * r0 * r0 / (1.0 + d * r0 * r0)
    }

    /// Solves eps^2 = 8 d/(1+d)^2 for delta on the requested branch.
    pub fn delta_from_eps_sq(eps_sq: f64, upper: bool) -> Option<f64> {
        if eps_sq <= 0.0 || eps_sq > 2.0 {
            return None;
        }
        // eps^2 d^2 + (2 eps^2 - 8) d + eps^2 = 0
        let (p, q) = ((2.0 * eps_sq - 8.0) / eps_sq, 1.0);
        let disc = p * p / 4.0 - q;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some(if upper { -p / 2.0 + root } else { -p / 2.0 - root })
    }
}

/// D_Omega at the center of the unit disk: the interior integrand vanishes
/// identically and the exterior integral equals pi.
pub const DISK_D_OMEGA_AT_CENTER: f64 = -std::f64::consts::PI;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_values() {
        let x = Point::new(0.5, 0.0);
        let origin = Point::new(0.0, 0.0);
        assert!((disk_green(1.0, x, origin) - (2.0f64.ln() / (2.0 * PI))).abs() < 1e-15);
        assert!((disk_regular_part(1.0, x, origin)).abs() < 1e-15);
        assert!((disk_robin(1.0, x) - (0.75f64.ln() / (2.0 * PI))).abs() < 1e-15);
        assert!(disk_robin(1.0, origin).abs() < 1e-15);
        let h = disk_robin_hessian(1.0, origin);
        assert!((h[0][0] + 1.0 / PI).abs() < 1e-15);
        assert!((h[1][1] + 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn disk_green_symmetry_and_boundary() {
        let x = Point::new(0.3, 0.2);
        let y = Point::new(-0.4, 0.5);
        assert!((disk_green(1.0, x, y) - disk_green(1.0, y, x)).abs() < 1e-14);
        let edge = Point::new(0.999999999, 0.0);
        assert!(disk_green(1.0, edge, y).abs() < 1e-7);
        assert!(disk_green(1.0, x, y) > 0.0);
    }

    #[test]
    fn rect_green_properties() {
        let (a, b) = (1.0, 10.0);
        let x = Point::new(0.3, 4.0);
        let y = Point::new(0.6, 5.2);
        // symmetry
        assert!((rect_green(a, b, x, y) - rect_green(a, b, y, x)).abs() < 1e-12);
        // positivity and boundary decay
        assert!(rect_green(a, b, x, y) > 0.0);
        assert!(rect_green(a, b, Point::new(1e-9, 4.0), y).abs() < 1e-7);
        assert!(rect_green(a, b, Point::new(0.3, 1e-9), Point::new(0.5, 0.7)).abs() < 1e-7);
        // regular part smooth through x = y
        let r0 = rect_regular_part(a, b, x, x);
        let r1 = rect_regular_part(a, b, Point::new(x.x + 1e-7, x.y), x);
        assert!((r0 - r1).abs() < 1e-5);
    }

    #[test]
    fn square_robin_center_matches_series() {
        // Robin function at the center of the unit square via the image sum,
        // compared against the same quantity from the (b,a)-swapped series:
        // the construction must be orientation independent.
        let swapped_x = |p: Point| Point::new(p.y, p.x);
        let x = Point::new(0.5, 0.5);
        let g1 = rect_robin(1.0, 1.0, x);
        let g2 = rect_robin(1.0, 1.0, swapped_x(x));
        assert!((g1 - g2).abs() < 1e-12);
        let y = Point::new(0.3, 0.7);
        let q = Point::new(0.6, 0.4);
        let s1 = rect_green(1.0, 1.0, y, q);
        let s2 = rect_green(1.0, 1.0, swapped_x(y), swapped_x(q));
        assert!((s1 - s2).abs() < 1e-12, "{s1} vs {s2}");
    }

    #[test]
    fn family_closed_forms() {
        let f = DiskFamily::new(1.0);
        assert!((f.eps_sq() - 2.0).abs() < 1e-15);
        assert!((f.lambda() - 4.0 * PI).abs() < 1e-15);
        assert!((f.u(0.0) - 4.0f64.ln()).abs() < 1e-15);
        assert!((f.u(1.0)).abs() < 1e-15);
        assert!((f.exp_mass() - 2.0 * PI).abs() < 1e-12);
        // E(delta -> 0) -> 1/(16 pi)
        let e0 = DiskFamily::new(1e-9).energy();
        assert!((e0 - 1.0 / (16.0 * PI)).abs() < 1e-9);
        // (lambda - 8 pi) * max rho = -8 on the whole family
        for &d in &[0.5, 1.0, 10.0, 50.0] {
            let f = DiskFamily::new(d);
            let s = (f.lambda() - 8.0 * PI) * ((1.0 + d) / PI);
            assert!((s + 8.0).abs() < 1e-10, "s = {s}");
        }
        // branch inversion
        for &d in &[0.3, 2.5, 20.0] {
            let f = DiskFamily::new(d);
            let back = DiskFamily::delta_from_eps_sq(f.eps_sq(), d > 1.0).unwrap();
            assert!((back - d).abs() < 1e-9 * (1.0 + d));
        }
    }
}
