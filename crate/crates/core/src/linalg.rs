//! Thin helpers over `faer` for the dense complex kernels used everywhere.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, MatRef, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

pub fn identity(n: usize) -> Mat<C64> {
    Mat::from_fn(n, n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

pub fn zeros(rows: usize, cols: usize) -> Mat<C64> {
    Mat::zeros(rows, cols)
}

pub fn adjoint(a: MatRef<'_, C64>) -> Mat<C64> {
    a.adjoint().to_owned()
}

/// `(A + A*) / 2`.
pub fn hermitize(a: MatRef<'_, C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

/// Spectral (largest singular value) norm.
pub fn op_norm(a: MatRef<'_, C64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    match a.singular_values() {
        Ok(s) => s.first().copied().unwrap_or(0.0),
        Err(_) => f64::NAN,
    }
}

/// Singular values in non-increasing order.
pub fn singular_values(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(|e| Error::Decomposition(format!("{e:?}")))
}

/// Thin SVD `A = W diag(s) V*` with singular values non-increasing.
pub struct ThinSvd {
    pub w: Mat<C64>,
    pub s: Vec<f64>,
    pub v: Mat<C64>,
}

pub fn thin_svd(a: MatRef<'_, C64>) -> Result<ThinSvd> {
    let svd = a.thin_svd().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = svd.S().column_vector().iter().map(|x| x.re).collect();
    Ok(ThinSvd { w: svd.U().to_owned(), s, v: svd.V().to_owned() })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eig(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let vals: Vec<f64> = evd.S().column_vector().iter().map(|x| x.re).collect();
    let u = evd.U();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((vals.into_iter().rev().collect(), vecs))
}

/// `V diag(f(w)) V*` for a Hermitian eigen-decomposition.
pub fn spectral_function(vals: &[f64], vecs: MatRef<'_, C64>, f: impl Fn(f64) -> C64) -> Mat<C64> {
    let n = vecs.nrows();
    let scaled = Mat::from_fn(n, vals.len(), |i, j| vecs[(i, j)] * f(vals[j]));
    &scaled * vecs.adjoint()
}

/// Columns of `a` selected by index.
pub fn select_columns(a: MatRef<'_, C64>, idx: &[usize]) -> Mat<C64> {
    Mat::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

/// `Q Q*` for a matrix of orthonormal columns.
pub fn range_projector(q: MatRef<'_, C64>) -> Mat<C64> {
    q * q.adjoint()
}

pub fn apply(a: MatRef<'_, C64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len(), "matrix/vector shape mismatch");
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

pub fn column(a: MatRef<'_, C64>, j: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_columns(rows: usize, cols: &[Vec<C64>]) -> Mat<C64> {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn inverse(a: MatRef<'_, C64>) -> Mat<C64> {
    a.partial_piv_lu().inverse()
}

pub fn solve(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    a.partial_piv_lu().solve(b)
}

/// `‖A*A − 1‖_F`.
pub fn unitarity_deviation(a: MatRef<'_, C64>) -> f64 {
    let g = a.adjoint() * a;
    frobenius((&g - &identity(a.ncols())).as_ref())
}

pub fn hermiticity_deviation(a: MatRef<'_, C64>) -> f64 {
    frobenius((a - a.adjoint()).as_ref())
}

/// Operator-norm deviation of `A` from being an orthogonal projector.
pub fn projector_deviation(a: MatRef<'_, C64>) -> f64 {
    let sq = a * a;
    op_norm((&sq - a).as_ref()).max(op_norm((a - a.adjoint()).as_ref()))
}

pub fn commutator(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    &(a * b) - &(b * a)
}

pub fn kron(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Mat<C64> {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Largest principal angle between the ranges of two orthonormal bases.
///
/// Computed as `asin ‖(1 − AA*)B‖₂`, which stays accurate for small angles.
/// Returns `π/2` when the dimensions differ.
pub fn max_principal_angle(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if b.ncols() == 0 {
        return 0.0;
    }
    let proj = a * (a.adjoint() * b);
    let resid = b - &proj;
    op_norm(resid.as_ref()).clamp(0.0, 1.0).asin()
}

pub fn random_complex_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

pub fn random_complex_mat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Mat<C64> {
    let data = random_complex_vec(rng, rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

/// Haar-like random unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Mat<C64> {
    let g = random_complex_mat(rng, n, n);
    let qr = g.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();
    Mat::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        q[(i, j)] * phase
    })
}

/// Random `rows × cols` contraction `W diag(s) V*` with the given singular values.
pub fn contraction_with_singular_values<R: Rng>(rng: &mut R, rows: usize, cols: usize, s: &[f64]) -> Mat<C64> {
    let k = rows.min(cols);
    assert_eq!(s.len(), k, "need min(rows, cols) singular values");
    let w = random_unitary(rng, rows);
    let v = random_unitary(rng, cols);
    let ws = Mat::from_fn(rows, k, |i, j| w[(i, j)] * s[j]);
    let vk = Mat::from_fn(cols, k, |i, j| v[(i, j)]);
    &ws * vk.adjoint()
}
