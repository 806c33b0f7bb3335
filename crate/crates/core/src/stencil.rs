//! Central finite-difference stencils for gradients and Hessians of
//! expensive black-box functions (Robin function, vortex Hamiltonian).

use crate::error::Result;

/// Central gradient with step `delta` in each coordinate.
pub fn gradient<F>(f: &mut F, x: &[f64], delta: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + delta;
        let fp = f(&xp)?;
        xp[i] = x[i] - delta;
        let fm = f(&xp)?;
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * delta);
    }
    Ok(g)
}

/// Central Hessian with step `delta`, symmetrized by construction.
pub fn hessian<F>(f: &mut F, x: &[f64], delta: f64) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let n = x.len();
    let f0 = f(x)?;
    let mut h = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for i in 0..n {
        xp[i] = x[i] + delta;
        let fp = f(&xp)?;
        xp[i] = x[i] - delta;
        let fm = f(&xp)?;
        xp[i] = x[i];
        h[i][i] = (fp - 2.0 * f0 + fm) / (delta * delta);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut eval = |si: f64, sj: f64| -> Result<f64> {
                xp[i] = x[i] + si * delta;
                xp[j] = x[j] + sj * delta;
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let hpp = eval(1.0, 1.0)?;
            let hpm = eval(1.0, -1.0)?;
            let hmp = eval(-1.0, 1.0)?;
            let hmm = eval(-1.0, -1.0)?;
            let v = (hpp - hpm - hmp + hmm) / (4.0 * delta * delta);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Ok(h)
}

pub fn determinant(h: &[Vec<f64>]) -> f64 {
    let n = h.len();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = h[i][j];
        }
    }
    m.lu().determinant()
}

/// Largest eigenvalue of a symmetric matrix given as rows.
pub fn max_eigenvalue(h: &[Vec<f64>]) -> f64 {
    let n = h.len();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = h[i][j];
        }
    }
    let eig = m.symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        // f = x^2 + 3xy - 2y^2 + x
        let mut f = |p: &[f64]| -> Result<f64> {
            Ok(p[0] * p[0] + 3.0 * p[0] * p[1] - 2.0 * p[1] * p[1] + p[0])
        };
        let x = [0.3, -0.7];
        let g = gradient(&mut f, &x, 1e-4).unwrap();
        assert!((g[0] - (2.0 * x[0] + 3.0 * x[1] + 1.0)).abs() < 1e-8);
        assert!((g[1] - (3.0 * x[0] - 4.0 * x[1])).abs() < 1e-8);
        let h = hessian(&mut f, &x, 1e-3).unwrap();
        assert!((h[0][0] - 2.0).abs() < 1e-6);
        assert!((h[0][1] - 3.0).abs() < 1e-6);
        assert!((h[1][1] + 4.0).abs() < 1e-6);
        assert!((determinant(&h) - (-17.0)).abs() < 1e-5);
    }
}
