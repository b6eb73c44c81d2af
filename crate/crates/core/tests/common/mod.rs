//! Independent dense oracles built on nalgebra, shared by the integration tests.
#![allow(dead_code)]

use eigentrack::linalg::DenseMatrix;
use eigentrack::operators::{LinearOperator, OperatorExt};
use eigentrack::OrthonormalBasis;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn from_na(a: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn op_to_na(op: &dyn LinearOperator) -> DMatrix<f64> {
    to_na(&op.to_dense())
}

/// Eigenvalues and eigenvectors of a symmetric matrix, values descending.
pub fn sym_eig(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), idx.len(), |i, j| eig.eigenvectors[(i, idx[j])]);
    (values, vectors)
}

/// Eigenvectors of the `r` eigenvalues largest in magnitude, and all
/// magnitudes sorted descending.
pub fn leading_by_magnitude(a: &DMatrix<f64>, r: usize) -> (DMatrix<f64>, Vec<f64>) {
    let (values, vectors) = sym_eig(a);
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| values[y].abs().total_cmp(&values[x].abs()));
    let basis = DMatrix::from_fn(a.nrows(), r, |i, j| vectors[(i, idx[j])]);
    (basis, idx.iter().map(|&i| values[i].abs()).collect())
}

/// `||(I - V V^T) W||_2` for matrices with orthonormal columns.
pub fn distance(v: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let resid = w - v * (v.transpose() * w);
    resid.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn basis_na(b: &OrthonormalBasis) -> DMatrix<f64> {
    to_na(b.matrix())
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal(rng: &mut ChaCha20Rng, n: usize, k: usize) -> DMatrix<f64> {
    gaussian(rng, n, k).qr().q()
}

/// `Q diag(values) Q^T` for a random orthogonal `Q`; returns the matrix and `Q`.
pub fn planted(rng: &mut ChaCha20Rng, values: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = values.len();
    let q = random_orthonormal(rng, n, n);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values));
    let a = &q * d * q.transpose();
    ((&a + a.transpose()) * 0.5, q)
}

/// A random basis whose largest principal angle to `span(truth)` is `angle`:
/// every column of `truth` is tilted by `angle` toward a random direction of
/// the orthogonal complement.
pub fn tilted(rng: &mut ChaCha20Rng, truth: &DMatrix<f64>, angle: f64) -> DMatrix<f64> {
    let (n, r) = truth.shape();
    let mut comp = gaussian(rng, n, r);
    comp -= truth * (truth.transpose() * &comp);
    let comp = comp.qr().q();
    truth * angle.cos() + comp * angle.sin()
}
