//! Thin wrappers over the sparse direct solvers and small dense helpers.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type Sparse = SparseColMat<usize, f64>;
pub type Trip = Triplet<usize, usize, f64>;

pub fn sparse_from_triplets(nrows: usize, ncols: usize, trips: &[Trip]) -> Result<Sparse> {
    SparseColMat::try_new_from_triplets(nrows, ncols, trips)
        .map_err(|e| Error::Linear(format!("sparse assembly failed: {e:?}")))
}

pub fn matvec(a: &Sparse, x: &[f64]) -> Vec<f64> {
    let v = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let ax = a.as_ref() * v.as_ref();
    (0..a.nrows()).map(|i| ax[(i, 0)]).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Factorization usable as a black-box solver.
pub trait Factor: Send + Sync {
    fn solve_vec(&self, rhs: &[f64]) -> Vec<f64>;

    fn solve_in_place(&self, rhs: &mut [f64]) {
        let out = self.solve_vec(rhs);
        rhs.copy_from_slice(&out);
    }
}

/// Sparse Cholesky for symmetric positive definite systems.
pub struct CholeskyFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl CholeskyFactor {
    pub fn new(a: &Sparse) -> Result<CholeskyFactor> {
        let sym = SymbolicLlt::try_new(a.symbolic(), Side::Lower)
            .map_err(|e| Error::Linear(format!("symbolic cholesky: {e:?}")))?;
        let llt = Llt::try_new_with_symbolic(sym, a.as_ref(), Side::Lower)
            .map_err(|e| Error::Linear(format!("numeric cholesky: {e:?}")))?;
        Ok(CholeskyFactor { llt, n: a.nrows() })
    }
}

impl Factor for CholeskyFactor {
    fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.n);
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.llt.solve(b.as_ref());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// Sparse LU for general (possibly indefinite) systems.
pub struct LuFactor {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LuFactor {
    pub fn new(a: &Sparse) -> Result<LuFactor> {
        let sym = SymbolicLu::try_new(a.symbolic())
            .map_err(|e| Error::Linear(format!("symbolic lu: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(sym, a.as_ref())
            .map_err(|e| Error::Linear(format!("numeric lu: {e:?}")))?;
        Ok(LuFactor { lu, n: a.nrows() })
    }
}

impl Factor for LuFactor {
    fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.n);
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(b.as_ref());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// a += s * b for sparse matrices assembled on the same pattern.
pub fn add_scaled_same_pattern(a: &mut Sparse, b: &Sparse, s: f64) {
    debug_assert_eq!(a.symbolic().col_ptr(), b.symbolic().col_ptr());
    debug_assert_eq!(a.symbolic().row_idx(), b.symbolic().row_idx());
    for (x, y) in a.val_mut().iter_mut().zip(b.val()) {
        *x += s * y;
    }
}

/// Solves (S + c v v^T) x = b through a factorization of S alone
/// (Sherman-Morrison).
pub fn solve_rank_one(factor: &dyn Factor, c: f64, v: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let mut x = factor.solve_vec(b);
    if c != 0.0 {
        let sv = factor.solve_vec(v);
        let denom = 1.0 + c * dot(v, &sv);
        if denom.abs() < 1e-300 {
            return Err(Error::Linear("singular rank-one update".into()));
        }
        let scale = c * dot(v, &x) / denom;
        axpy(&mut x, -scale, &sv);
    }
    Ok(x)
}

/// Dense generalized symmetric eigenproblem A x = lambda B x with B SPD.
/// Returns eigenvalues ascending with B-orthonormal eigenvectors as columns.
pub fn dense_generalized_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Eigen("metric matrix not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}, kept symmetric.
    let linv_a = l.clone().solve_lower_triangular(a).ok_or_else(|| {
        Error::Eigen("triangular solve failed".into())
    })?;
    let c = l
        .clone()
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = (c.clone() + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).clone_owned();
        let x = l
            .transpose()
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Eigen("back substitution failed".into()))?;
        vectors.set_column(k, &x);
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Sparse {
        let mut trips = Vec::new();
        for i in 0..n {
            trips.push(Triplet::new(i, i, 2.0));
            if i + 1 < n {
                trips.push(Triplet::new(i, i + 1, -1.0));
                trips.push(Triplet::new(i + 1, i, -1.0));
            }
        }
        sparse_from_triplets(n, n, &trips).unwrap()
    }

    #[test]
    fn cholesky_and_lu_agree() {
        let a = laplacian_1d(20);
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let x1 = CholeskyFactor::new(&a).unwrap().solve_vec(&b);
        let x2 = LuFactor::new(&a).unwrap().solve_vec(&b);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-10);
        }
        let r = matvec(&a, &x1);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn sherman_morrison_matches_direct() {
        let n = 12;
        let a = laplacian_1d(n);
        let v: Vec<f64> = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let c = 0.7;
        let factor = CholeskyFactor::new(&a).unwrap();
        let x = solve_rank_one(&factor, c, &v, &b).unwrap();
        // residual of (A + c v v^T) x = b
        let mut r = matvec(&a, &x);
        let vx = dot(&v, &x);
        axpy(&mut r, c * vx, &v);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
    }

    #[test]
    fn generalized_eig_on_known_pair() {
        // A = diag(1, 4), B = diag(1, 2) -> eigenvalues 1 and 2.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let (vals, vecs) = dense_generalized_eig(&a, &b).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 2.0).abs() < 1e-12);
        // B-orthonormality
        let g = vecs.transpose() * b * &vecs;
        assert!((g[(0, 0)] - 1.0).abs() < 1e-10);
        assert!(g[(0, 1)].abs() < 1e-10);
    }
}
