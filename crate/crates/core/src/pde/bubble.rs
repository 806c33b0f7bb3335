use crate::error::{Error, Result};
use crate::fem::Fem;
use crate::geometry::Point;
use crate::green::GreenOracle;
use crate::pde::{PdeContext, SolveResult};

/// One detected concentration peak of the translated field.
#[derive(Debug, Clone, Copy)]
pub struct Peak {
    pub node: usize,
    pub location: Point,
    /// Peak height of u_tilde after the quadratic fit.
    pub height: f64,
}

/// Diagnostics of a near-concentrating state: peak locations and heights,
/// local masses, bubble-profile errors near the peaks and the Green far
/// field error away from them.
#[derive(Debug, Clone)]
pub struct BubbleReport {
    pub peaks: Vec<Peak>,
    pub local_masses: Vec<f64>,
    pub profile_errors: Vec<f64>,
    pub far_field_error: f64,
    pub r0: f64,
    pub flag: Option<String>,
}

/// Local maxima of the nodal field, strongest first, separated pairwise by
/// at least `min_sep`.
pub fn detect_peaks(fem: &Fem, values: &[f64], count: usize, min_sep: f64) -> Vec<Peak> {
    let mesh = &fem.mesh;
    let mut candidates: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&i| {
            !mesh.is_boundary(i)
                && mesh
                    .neighbors(i)
                    .iter()
                    .all(|&j| values[j] < values[i] || (values[j] == values[i] && j > i))
        })
        .collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut peaks: Vec<Peak> = Vec::new();
    for node in candidates {
        if peaks.len() >= count {
            break;
        }
        let p = mesh.node(node);
        if peaks.iter().all(|q| q.location.dist(p) >= min_sep) {
            let (location, height) = refine_peak(fem, values, node);
            peaks.push(Peak { node, location, height });
        }
    }
    peaks
}

/// Quadratic least-squares fit over the 1-ring of the maximal node; returns
/// the fitted peak if the fit is concave, the nodal values otherwise.
pub fn refine_peak(fem: &Fem, values: &[f64], node: usize) -> (Point, f64) {
    let mesh = &fem.mesh;
    let center = mesh.node(node);
    let mut pts: Vec<(Point, f64)> = vec![(center, values[node])];
    for &j in &mesh.neighbors(node) {
        pts.push((mesh.node(j), values[j]));
    }
    if pts.len() < 6 {
        return (center, values[node]);
    }
    // z = a + b dx + c dy + d dx^2 + e dx dy + f dy^2
    let mut ata = nalgebra::DMatrix::<f64>::zeros(6, 6);
    let mut atb = nalgebra::DVector::<f64>::zeros(6);
    for &(p, z) in &pts {
        let (dx, dy) = (p.x - center.x, p.y - center.y);
        let row = [1.0, dx, dy, dx * dx, dx * dy, dy * dy];
        for i in 0..6 {
            for j in 0..6 {
                ata[(i, j)] += row[i] * row[j];
            }
            atb[i] += row[i] * z;
        }
    }
    let Some(coef) = ata.lu().solve(&atb) else {
        return (center, values[node]);
    };
    let (b, c, d, e, f) = (coef[1], coef[2], coef[3], coef[4], coef[5]);
    let det = 4.0 * d * f - e * e;
    if det <= 0.0 || d >= 0.0 {
        return (center, values[node]);
    }
    let dx: f64 = (-2.0 * f * b + e * c) / det;
    let dy: f64 = (-2.0 * d * c + e * b) / det;
    let h = mesh.h_max();
    if dx.hypot(dy) > h {
        return (center, values[node]);
    }
    let z = coef[0] + b * dx + c * dy + d * dx * dx + e * dx * dy + f * dy * dy;
    (Point::new(center.x + dx, center.y + dy), z)
}

/// Mass of h e^{u_tilde} inside the ball, times lambda. Triangles crossing
/// the circle are subdivided a few levels so the indicator error stays
/// small.
pub fn local_mass(ctx: &PdeContext, state: &SolveResult, center: Point, r0: f64) -> f64 {
    let fem = &ctx.fem;
    let mesh = &fem.mesh;
    let mut total = 0.0;
    let log_mass = state.exp_mass.ln();
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        let corners = [mesh.node(tri[0]), mesh.node(tri[1]), mesh.node(tri[2])];
        let inside = corners.map(|p| p.dist(center) <= r0);
        if inside.iter().all(|&b| !b) && !circle_may_cut(&corners, center, r0) {
            continue;
        }
        let all_in = inside.iter().all(|&b| b) && !circle_may_cut(&corners, center, r0);
        let nodal = [
            state.u_tilde.values[tri[0]],
            state.u_tilde.values[tri[1]],
            state.u_tilde.values[tri[2]],
        ];
        total += ball_integral_on_triangle(
            ctx, t, &corners, &nodal, log_mass, center, r0, all_in, 0,
        );
    }
    state.lambda * total
}

fn circle_may_cut(corners: &[Point; 3], center: Point, r0: f64) -> bool {
    // conservative: bounding circle of the triangle against the ball ring
    let c = Point::new(
        (corners[0].x + corners[1].x + corners[2].x) / 3.0,
        (corners[0].y + corners[1].y + corners[2].y) / 3.0,
    );
    let rad = corners.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
    (c.dist(center) - r0).abs() <= rad
}

#[allow(clippy::too_many_arguments)]
fn ball_integral_on_triangle(
    ctx: &PdeContext,
    t: usize,
    corners: &[Point; 3],
    nodal_u: &[f64; 3],
    log_mass: f64,
    center: Point,
    r0: f64,
    all_in: bool,
    depth: usize,
) -> f64 {
    let area2 = (corners[1] - corners[0]).cross(corners[2] - corners[0]);
    if !all_in && depth < 4 && circle_may_cut(corners, center, r0) {
        // subdivide into 4 and recurse
        let m01 = (corners[0] + corners[1]).scale(0.5);
        let m12 = (corners[1] + corners[2]).scale(0.5);
        let m20 = (corners[2] + corners[0]).scale(0.5);
        let u01 = 0.5 * (nodal_u[0] + nodal_u[1]);
        let u12 = 0.5 * (nodal_u[1] + nodal_u[2]);
        let u20 = 0.5 * (nodal_u[2] + nodal_u[0]);
        let kids: [([Point; 3], [f64; 3]); 4] = [
            ([corners[0], m01, m20], [nodal_u[0], u01, u20]),
            ([m01, corners[1], m12], [u01, nodal_u[1], u12]),
            ([m20, m12, corners[2]], [u20, u12, nodal_u[2]]),
            ([m01, m12, m20], [u01, u12, u20]),
        ];
        return kids
            .iter()
            .map(|(c3, u3)| {
                let inside = c3.map(|p| p.dist(center) <= r0);
                let sub_all_in = inside.iter().all(|&b| b) && !circle_may_cut(c3, center, r0);
                ball_integral_on_triangle(ctx, t, c3, u3, log_mass, center, r0, sub_all_in, depth + 1)
            })
            .sum();
    }
    // leaf: quadrature with centroid indicator
    let centroid = Point::new(
        (corners[0].x + corners[1].x + corners[2].x) / 3.0,
        (corners[0].y + corners[1].y + corners[2].y) / 3.0,
    );
    if !all_in && centroid.dist(center) > r0 {
        return 0.0;
    }
    let quad = &ctx.fem.quad;
    let mut acc = 0.0;
    for (&(xi, eta), &w) in quad.points.iter().zip(&quad.weights) {
        let p = corners[0] + (corners[1] - corners[0]).scale(xi) + (corners[2] - corners[0]).scale(eta);
        let u = nodal_u[0] * (1.0 - xi - eta) + nodal_u[1] * xi + nodal_u[2] * eta;
        let log_h = ctx.log_h_value(t, p);
        acc += w * area2 * (log_h + u).min(700.0).exp();
    }
    acc
}

impl PdeContext {
    /// log h at an arbitrary point of triangle `t` (exact for the smooth
    /// factor, interpolated corrections are affine on the triangle so the
    /// quadrature tables suffice for the Green part through interpolation
    /// of the parent nodal field).
    fn log_h_value(&self, t: usize, p: Point) -> f64 {
        if self.weight.is_trivial() {
            return 0.0;
        }
        // reconstruct from quadrature values by affine fit: log h on one
        // triangle = smooth hhat part (evaluated exactly) plus Green parts
        // that are affine to quadrature accuracy; use barycentric
        // interpolation of the tabulated quadrature values instead.
        let tri_vals = &self.log_h_quad[t];
        let pts: Vec<Point> = {
            let tri = self.fem.mesh.triangles()[t];
            let (pa, pb, pc) = (
                self.fem.mesh.node(tri[0]),
                self.fem.mesh.node(tri[1]),
                self.fem.mesh.node(tri[2]),
            );
            self.fem
                .quad
                .points
                .iter()
                .map(|&(xi, eta)| pa + (pb - pa).scale(xi) + (pc - pa).scale(eta))
                .collect()
        };
        // affine least squares through the quadrature samples
        let mut ata = nalgebra::Matrix3::<f64>::zeros();
        let mut atb = nalgebra::Vector3::<f64>::zeros();
        for (q, &v) in tri_vals.iter().enumerate() {
            let row = [1.0, pts[q].x, pts[q].y];
            for i in 0..3 {
                for j in 0..3 {
                    ata[(i, j)] += row[i] * row[j];
                }
                atb[i] += row[i] * v;
            }
        }
        match ata.lu().solve(&atb) {
            Some(c) => c[0] + c[1] * p.x + c[2] * p.y,
            None => tri_vals.iter().sum::<f64>() / tri_vals.len() as f64,
        }
    }
}

/// Locates the concentration peaks of a converged state and measures how
/// closely it matches the standard bubble profile near each peak and the
/// Green-function far field away from them.
pub fn bubble_diagnose(
    ctx: &PdeContext,
    oracle: &GreenOracle,
    state: &SolveResult,
    expected_m: usize,
    r0: Option<f64>,
) -> Result<BubbleReport> {
    if expected_m == 0 {
        return Err(Error::InvalidArg("expected_m must be at least 1".into()));
    }
    let fem = &ctx.fem;
    let mesh = &fem.mesh;
    let h = mesh.h_max();
    let peaks = detect_peaks(fem, &state.u_tilde.values, expected_m, 4.0 * h);
    let mut flag = None;
    if peaks.len() != expected_m {
        flag = Some(format!("found {} peaks, expected {}", peaks.len(), expected_m));
    }
    if peaks.is_empty() {
        return Ok(BubbleReport {
            peaks,
            local_masses: Vec::new(),
            profile_errors: Vec::new(),
            far_field_error: f64::NAN,
            r0: 0.0,
            flag: Some("no interior local maximum".into()),
        });
    }
    // r0 default: a quarter of the least separation among peaks and to the
    // boundary.
    let r0 = r0.unwrap_or_else(|| {
        let mut dmin = f64::INFINITY;
        for (i, p) in peaks.iter().enumerate() {
            dmin = dmin.min(mesh.boundary_distance(p.location));
            for q in peaks.iter().skip(i + 1) {
                dmin = dmin.min(p.location.dist(q.location));
            }
        }
        0.25 * dmin
    });
    // low states: no concentration to diagnose
    let mu_max = peaks[0].height;
    if mu_max < 1.0 {
        flag = Some(format!("no bubble: peak height {mu_max:.3} too small"));
    }

    let local_masses: Vec<f64> = peaks
        .iter()
        .map(|p| local_mass(ctx, state, p.location, r0))
        .collect();

    // profile error eta_j: sup over nodes in B_r0 of
    // |u_tilde - U_j - (G_j^*(x) - G_j^*(x_j))|
    let mut profile_errors = Vec::with_capacity(peaks.len());
    let locations: Vec<Point> = peaks.iter().map(|p| p.location).collect();
    for (j, peak) in peaks.iter().enumerate() {
        let hj = ctx
            .weight
            .eval(oracle, peak.location)
            .map(|w| w.h)
            .unwrap_or(1.0);
        let grad_log_h = ctx
            .weight
            .eval(oracle, peak.location)
            .map(|w| w.grad_log_h)
            .unwrap_or(crate::geometry::Point::new(0.0, 0.0));
        let c = state.lambda * hj * peak.height.exp() / 8.0;
        let x_star = peak.location + grad_log_h.scale(1.0 / (4.0 * c));
        let g_star_at_peak = g_star(oracle, &locations, j, peak.location)?;
        let mut sup = 0.0f64;
        for i in 0..mesh.num_nodes() {
            let x = mesh.node(i);
            let d = x.dist(peak.location);
            if d > r0 || mesh.is_boundary(i) {
                continue;
            }
            let u_profile = peak.height - 2.0 * (1.0 + c * x.dist(x_star).powi(2)).ln();
            let g_term = g_star(oracle, &locations, j, x)? - g_star_at_peak;
            let err = state.u_tilde.values[i] - u_profile - g_term;
            sup = sup.max(err.abs());
        }
        profile_errors.push(sup);
    }

    // far field error w_n = u_tilde - sum_j rho_j G(x, x_j) - u_tilde|_bd
    let boundary_value = -state.exp_mass.ln();
    let mut far = 0.0f64;
    let corrections: Vec<_> = locations
        .iter()
        .map(|&p| oracle.correction(p))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..mesh.num_nodes() {
        let x = mesh.node(i);
        if locations.iter().any(|&p| p.dist(x) <= r0) || mesh.is_boundary(i) {
            continue;
        }
        let mut green_sum = 0.0;
        for (j, corr) in corrections.iter().enumerate() {
            let d = x.dist(locations[j]).max(1e-300);
            let g = -d.ln() / (2.0 * std::f64::consts::PI) + corr[i];
            green_sum += local_masses[j] * g;
        }
        let err = state.u_tilde.values[i] - green_sum - boundary_value;
        far = far.max(err.abs());
    }

    Ok(BubbleReport { peaks, local_masses, profile_errors, far_field_error: far, r0, flag })
}

/// G_j^*(x) = 8 pi R(x, q_j) + 8 pi sum_{l != j} G(x, q_l).
pub fn g_star(oracle: &GreenOracle, q: &[Point], j: usize, x: Point) -> Result<f64> {
    use std::f64::consts::PI;
    let mut v = 8.0 * PI * oracle.regular_part(q[j], x)?;
    for (l, &ql) in q.iter().enumerate() {
        if l != j {
            v += 8.0 * PI * oracle.green(ql, x)?;
        }
    }
    Ok(v)
}
