//! Dense linear algebra kernels: column-major matrices, thin QR, small
//! symmetric eigensolves, subspace distances and norm estimation.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::rng::{gaussian_vector, rng_from_seed, Rng};

/// Relative drop tolerance used to declare a column numerically dependent.
pub const DROP_TOL: f64 = 1e-12;

/// Default orthonormality tolerance for [`OrthonormalBasis`].
pub const DEFAULT_ORTHO_TOL: f64 = 1e-10;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale_in_place(a: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= a;
    }
}

/// Column-major dense matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self::from_fn(rows, cols, |i, j| data[i * cols + j]))
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column of length {} in a matrix with {rows} rows",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self { rows, cols: columns.len(), data })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// `self * other`
    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b != 0.0 {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other`
    pub fn tr_matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot form ({}x{})^T times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.cols, other.cols, |i, j| dot(self.col(i), other.col(j))))
    }

    /// `self^T * x` for a vector `x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// `self * x` for a vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (j, xj) in x.iter().enumerate() {
            if *xj != 0.0 {
                axpy(*xj, self.col(j), &mut y);
            }
        }
        y
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| a * x).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|a_ij - a_ji|`; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for j in 0..self.cols {
            for i in 0..j {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(A + A^T) / 2` for a square matrix.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        Self { rows: self.rows, cols: idx.len(), data }
    }

    /// The first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        let k = k.min(self.cols);
        Self { rows: self.rows, cols: k, data: self.data[..self.rows * k].to_vec() }
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hcat of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { rows: self.rows, cols: self.cols + other.cols, data })
    }

    pub(crate) fn push_column(&mut self, c: &[f64]) {
        debug_assert_eq!(c.len(), self.rows);
        self.data.extend_from_slice(c);
        self.cols += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// An `n x k` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis {
    q: DenseMatrix,
}

impl OrthonormalBasis {
    /// Validates `||Q^T Q - I||_max <= tol` and wraps the matrix.
    pub fn new(q: DenseMatrix, tol: f64) -> Result<Self> {
        if q.ncols() > q.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "basis with {} columns in dimension {}",
                q.ncols(),
                q.nrows()
            )));
        }
        let err = orthonormality_error(&q);
        if !(err <= tol) {
            return Err(Error::InvalidArgument(format!(
                "columns are not orthonormal (error {err:e} > {tol:e})"
            )));
        }
        Ok(Self { q })
    }

    /// Wraps a matrix produced by an orthonormalizing kernel.
    pub(crate) fn from_trusted(q: DenseMatrix) -> Self {
        debug_assert!(orthonormality_error(&q) < 1e-8, "basis drifted: {}", orthonormality_error(&q));
        Self { q }
    }

    /// The `n x 0` basis.
    pub fn empty(n: usize) -> Self {
        Self { q: DenseMatrix::zeros(n, 0) }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.q
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Number of columns `k`.
    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    pub fn col(&self, j: usize) -> &[f64] {
        self.q.col(j)
    }

    pub fn leading(&self, k: usize) -> Self {
        Self { q: self.q.leading_columns(k) }
    }

    /// `||Q^T Q - I||_max`
    pub fn orthogonality_error(&self) -> f64 {
        orthonormality_error(&self.q)
    }

    /// `x - Q (Q^T x)`
    pub fn project_out(&self, x: &mut [f64]) {
        for j in 0..self.q.ncols() {
            let c = self.q.col(j);
            axpy(-dot(c, x), c, x);
        }
    }
}

fn orthonormality_error(q: &DenseMatrix) -> f64 {
    let k = q.ncols();
    let mut worst = 0.0f64;
    for i in 0..k {
        for j in 0..=i {
            let g = dot(q.col(i), q.col(j));
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// Eigen-decomposition of a small symmetric matrix, eigenvalues descending.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricSpectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: DenseMatrix,
}

/// Householder factorization that never fails: `q` is always orthonormal,
/// `first_deficient` reports the first column whose `R` diagonal fell below
/// the drop tolerance.
pub(crate) struct HouseholderQr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    pub deficient: Vec<usize>,
}

pub(crate) fn householder_qr(a: &DenseMatrix) -> HouseholderQr {
    let (n, k) = a.shape();
    debug_assert!(n >= k);
    let input_norms: Vec<f64> = (0..k).map(|j| norm2(a.col(j))).collect();
    let mut work = a.clone();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(k);
    for j in 0..k {
        let x = &work.col(j)[j..];
        let xnorm = norm2(x);
        if xnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm = norm2(&v);
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        scale_in_place(1.0 / vnorm, &mut v);
        for c in j..k {
            let col = &mut work.col_mut(c)[j..];
            let s = 2.0 * dot(&v, col);
            axpy(-s, &v, col);
        }
        reflectors.push(Some(v));
    }
    let mut r = DenseMatrix::from_fn(k, k, |i, j| if i <= j { work[(i, j)] } else { 0.0 });
    let mut q = DenseMatrix::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 });
    for (j, refl) in reflectors.iter().enumerate().rev() {
        if let Some(v) = refl {
            for c in 0..k {
                let col = &mut q.col_mut(c)[j..];
                let s = 2.0 * dot(v, col);
                axpy(-s, v, col);
            }
        }
    }
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for c in j..k {
                r[(j, c)] = -r[(j, c)];
            }
            scale_in_place(-1.0, q.col_mut(j));
        }
    }
    let deficient = (0..k)
        .filter(|&j| input_norms[j] == 0.0 || r[(j, j)].abs() <= DROP_TOL * input_norms[j])
        .collect();
    HouseholderQr { q, r, deficient }
}

/// Thin QR factorization `X = Q R` with a nonnegative diagonal on `R`.
///
/// Fails with [`Error::RankDeficient`] when some `|R_jj|` drops below
/// `1e-12` times the norm of input column `j`.
pub fn qr_thin(x: &DenseMatrix) -> Result<(OrthonormalBasis, DenseMatrix)> {
    let (n, k) = x.shape();
    if n < k {
        return Err(Error::DimensionMismatch(format!("thin QR needs n >= k, got {n}x{k}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument("non-finite entry in QR input".into()));
    }
    let HouseholderQr { q, r, deficient } = householder_qr(x);
    if let Some(&column) = deficient.first() {
        return Err(Error::RankDeficient { column });
    }
    Ok((OrthonormalBasis::from_trusted(q), r))
}

/// Orthonormalizes the columns of `x`, replacing numerically dependent
/// columns with random directions. Returns whether a replacement happened.
pub(crate) fn orthonormalize_with_fill(x: &DenseMatrix, rng: &mut Rng) -> (DenseMatrix, bool) {
    let HouseholderQr { mut q, deficient, .. } = householder_qr(x);
    if deficient.is_empty() {
        return (q, false);
    }
    let n = q.nrows();
    for &j in &deficient {
        // Householder already produced an orthonormal direction here, but it
        // is aligned with a coordinate axis; a random one avoids structure.
        for _attempt in 0..8 {
            let mut v = gaussian_vector(rng, n);
            for _pass in 0..2 {
                for c in 0..q.ncols() {
                    if c != j {
                        let qc = q.col(c).to_vec();
                        axpy(-dot(&qc, &v), &qc, &mut v);
                    }
                }
            }
            let nv = norm2(&v);
            if nv > 1e-8 {
                scale_in_place(1.0 / nv, &mut v);
                q.col_mut(j).copy_from_slice(&v);
                break;
            }
        }
    }
    (q, true)
}

/// Symmetric eigensolver (Householder tridiagonalization plus implicit QL).
///
/// Input must be square with asymmetry at most `1e-9 * max(1, max|a_ij|)`;
/// the symmetric part is decomposed. Eigenvalues come back in descending order.
pub fn sym_eig_small(a: &DenseMatrix) -> Result<SymmetricSpectrum> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::DimensionMismatch(format!("eigensolve of a {n}x{m} matrix")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("non-finite entry in eigensolve input".into()));
    }
    let asym = a.max_asymmetry();
    if asym > 1e-9 * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(SymmetricSpectrum { values: vec![], vectors: DenseMatrix::zeros(0, 0) });
    }
    let sym = a.symmetrized();
    // Row-major working copy for the reduction.
    let mut v: Vec<f64> = (0..n * n).map(|idx| sym[(idx / n, idx % n)]).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    // tql2 rotates columns; transpose so each column is contiguous.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[j * n + i] = v[i * n + j];
        }
    }
    tql2(n, &mut z, &mut d, &mut e)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut data = Vec::with_capacity(n * n);
    for &i in &order {
        data.extend_from_slice(&z[i * n..(i + 1) * n]);
    }
    Ok(SymmetricSpectrum { values, vectors: DenseMatrix { rows: n, cols: n, data } })
}

// Householder reduction to tridiagonal form; `v` is row-major n x n and ends
// up holding the accumulated orthogonal transform.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
                v[at(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = 0.0;
    }
    v[at(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal (d, e); `z` is column-major and receives the
// eigenvectors.
fn tql2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > 60 {
                    return Err(Error::DegenerateSpectrum(
                        "tridiagonal QL iteration did not converge".into(),
                    ));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Largest principal-angle sine between `span(V)` and `span(W)`.
///
/// Computed as `||(I - V V^T) W||_2`, which keeps full relative accuracy for
/// tiny angles.
pub fn subspace_distance(v: &OrthonormalBasis, w: &OrthonormalBasis) -> Result<f64> {
    if v.dim() != w.dim() || v.rank() != w.rank() {
        return Err(Error::DimensionMismatch(format!(
            "bases of shape {}x{} and {}x{}",
            v.dim(),
            v.rank(),
            w.dim(),
            w.rank()
        )));
    }
    if w.rank() == 0 {
        return Ok(0.0);
    }
    let mut p = w.matrix().clone();
    for j in 0..p.ncols() {
        v.project_out(p.col_mut(j));
    }
    let g = p.tr_matmul(&p)?.symmetrized();
    let top = sym_eig_small(&g)?.values[0];
    Ok(top.max(0.0).sqrt().min(1.0))
}

/// Appends the columns of `x` to `v` by two-pass modified Gram-Schmidt.
///
/// Returns only the new orthonormal columns, each orthogonal to `v` and to
/// each other. Fails with [`Error::RankDeficient`] if a column of `x` is
/// numerically inside the span of what precedes it.
pub fn orthogonalize_against(v: &OrthonormalBasis, x: &DenseMatrix) -> Result<OrthonormalBasis> {
    let n = v.dim();
    if x.nrows() != n {
        return Err(Error::DimensionMismatch(format!("basis in R^{n}, block with {} rows", x.nrows())));
    }
    if v.rank() + x.ncols() > n {
        return Err(Error::DimensionMismatch(format!(
            "{} + {} columns exceed dimension {n}",
            v.rank(),
            x.ncols()
        )));
    }
    let mut out = DenseMatrix::zeros(n, 0);
    for j in 0..x.ncols() {
        let mut w = x.col(j).to_vec();
        let original = norm2(&w);
        for _pass in 0..2 {
            v.project_out(&mut w);
            for c in 0..out.ncols() {
                let oc = out.col(c);
                axpy(-dot(oc, &w), oc, &mut w);
            }
        }
        let remaining = norm2(&w);
        if original == 0.0 || remaining <= DROP_TOL * original {
            return Err(Error::RankDeficient { column: j });
        }
        scale_in_place(1.0 / remaining, &mut w);
        out.push_column(&w);
    }
    Ok(OrthonormalBasis::from_trusted(out))
}

/// Result of [`spectral_norm_estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate {
    /// Lower bound on `||op||_2` (exact up to the stopping tolerance).
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power-iteration estimate of the spectral norm of an operator.
///
/// Symmetric operators are iterated directly using `||A x||` as the
/// estimate, which is insensitive to `+-` eigenvalue pairs. Rectangular or
/// nonsymmetric operators go through `A^T A`. The estimate is always a lower
/// bound. It stops once the increment, corrected by the observed contraction
/// rate, stays below `tol * estimate` for three consecutive iterations;
/// otherwise it returns the last value with `converged = false`.
pub fn spectral_norm_estimate(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<NormEstimate> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidArgument("norm estimate needs tol > 0 and max_iter >= 1".into()));
    }
    let n = op.ncols();
    let m = op.nrows();
    if n == 0 || m == 0 {
        return Ok(NormEstimate { value: 0.0, iterations: 0, converged: true });
    }
    let gram = !op.is_symmetric();
    let mut rng = rng_from_seed(seed);
    let mut x = gaussian_vector(&mut rng, n);
    let nx = norm2(&x);
    scale_in_place(1.0 / nx, &mut x);
    let mut y = vec![0.0; m];
    let mut z = vec![0.0; n];
    let mut prev = 0.0;
    let mut prev_delta = f64::NAN;
    let mut quiet = 0;
    let mut value = 0.0;
    for it in 1..=max_iter {
        op.apply_into(&x, &mut y);
        let (next, sigma) = if gram {
            op.apply_transpose_into(&y, &mut z);
            let nz = norm2(&z);
            (&mut z, nz.sqrt())
        } else {
            let ny = norm2(&y);
            (&mut y, ny)
        };
        if sigma == 0.0 {
            return Ok(NormEstimate { value: 0.0, iterations: it, converged: true });
        }
        let growth = norm2(next);
        scale_in_place(1.0 / growth, next);
        x.copy_from_slice(next);
        value = sigma;
        let delta = (sigma - prev).abs();
        let q = if prev_delta.is_finite() && prev_delta > 0.0 { delta / prev_delta } else { 1.0 };
        let remaining = if q < 1.0 { delta * q / (1.0 - q) } else { f64::INFINITY };
        let err = delta.max(remaining.min(f64::MAX));
        if it > 1 && err <= tol * sigma {
            quiet += 1;
            if quiet >= 3 {
                return Ok(NormEstimate { value, iterations: it, converged: true });
            }
        } else {
            quiet = 0;
        }
        prev_delta = delta;
        prev = sigma;
    }
    Ok(NormEstimate { value, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::DenseOp;
    use crate::rng::gaussian_matrix;

    #[test]
    fn qr_example_two_columns() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let (q, r) = qr_thin(&x).unwrap();
        let expect_q = [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]];
        for i in 0..3 {
            for j in 0..2 {
                assert!((q.matrix()[(i, j)] - expect_q[i][j]).abs() < 1e-15);
            }
        }
        assert!((r[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((r[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((r[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(r[(1, 0)], 0.0);
    }

    #[test]
    fn qr_rejects_duplicate_columns() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        assert_eq!(qr_thin(&x).unwrap_err(), Error::RankDeficient { column: 1 });
    }

    #[test]
    fn qr_rejects_wide_input() {
        let x = DenseMatrix::zeros(2, 3);
        assert!(matches!(qr_thin(&x), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn qr_reconstructs_random_input() {
        let x = gaussian_matrix(&mut rng_from_seed(11), 30, 6);
        let (q, r) = qr_thin(&x).unwrap();
        let back = q.matrix().matmul(&r).unwrap();
        assert!(back.sub(&x).unwrap().max_abs() < 1e-12);
        assert!(q.orthogonality_error() < 1e-14);
        for j in 0..6 {
            assert!(r[(j, j)] >= 0.0);
        }
    }

    #[test]
    fn eig_diagonal_example() {
        let a = DenseMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let s = sym_eig_small(&a).unwrap();
        assert_eq!(s.values, vec![3.0, 2.0, 1.0]);
        let expected_axis = [0, 2, 1];
        for (j, &axis) in expected_axis.iter().enumerate() {
            assert!((s.vectors[(axis, j)].abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eig_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(sym_eig_small(&a), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn eig_one_by_one_and_empty() {
        let s = sym_eig_small(&DenseMatrix::diagonal(&[-4.0])).unwrap();
        assert_eq!(s.values, vec![-4.0]);
        assert!(sym_eig_small(&DenseMatrix::zeros(0, 0)).unwrap().values.is_empty());
    }

    #[test]
    fn eig_reconstructs_random_symmetric() {
        let g = gaussian_matrix(&mut rng_from_seed(5), 40, 40);
        let a = g.add(&g.transpose()).unwrap();
        let s = sym_eig_small(&a).unwrap();
        let lam = DenseMatrix::diagonal(&s.values);
        let back = s.vectors.matmul(&lam).unwrap().matmul(&s.vectors.transpose()).unwrap();
        assert!(back.sub(&a).unwrap().max_abs() < 1e-11);
        assert!(OrthonormalBasis::new(s.vectors.clone(), 1e-12).is_ok());
        assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn distance_between_axes() {
        let e1 = OrthonormalBasis::new(DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(), 0.0).unwrap();
        let e2 = OrthonormalBasis::new(DenseMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(), 0.0).unwrap();
        assert_eq!(subspace_distance(&e1, &e2).unwrap(), 1.0);
        assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
    }

    #[test]
    fn distance_at_tiny_angle_is_accurate() {
        let t = 1e-10f64;
        let a = OrthonormalBasis::new(DenseMatrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(), 0.0).unwrap();
        let b = OrthonormalBasis::new(
            DenseMatrix::from_rows(&[vec![t.cos()], vec![t.sin()]]).unwrap(),
            1e-15,
        )
        .unwrap();
        let d = subspace_distance(&a, &b).unwrap();
        assert!((d - t.sin()).abs() <= 1e-6 * t);
    }

    #[test]
    fn orthogonalize_against_empty_basis() {
        let v = OrthonormalBasis::empty(3);
        let x = DenseMatrix::from_rows(&[vec![2.0], vec![0.0], vec![0.0]]).unwrap();
        let q = orthogonalize_against(&v, &x).unwrap();
        assert_eq!(q.matrix().col(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn orthogonalize_against_detects_dependence() {
        let v = OrthonormalBasis::new(DenseMatrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap(), 0.0).unwrap();
        let x = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(orthogonalize_against(&v, &x).unwrap_err(), Error::RankDeficient { column: 0 });
    }

    #[test]
    fn norm_estimate_of_signed_diagonal() {
        let op = DenseOp::new(DenseMatrix::diagonal(&[-5.0, 5.0, 1.0]));
        let est = spectral_norm_estimate(&op, 1e-8, 300, 1).unwrap();
        assert!((est.value - 5.0).abs() < 1e-8);
    }

    #[test]
    fn norm_estimate_of_zero_operator() {
        let op = DenseOp::new(DenseMatrix::zeros(4, 4));
        let est = spectral_norm_estimate(&op, 1e-4, 10, 0).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn norm_estimate_of_rectangular_operator() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let est = spectral_norm_estimate(&DenseOp::new(a), 1e-10, 500, 2).unwrap();
        assert!((est.value - 3.0).abs() < 1e-8);
    }

    #[test]
    fn orthonormal_fill_replaces_dependent_columns() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let (q, filled) = orthonormalize_with_fill(&x, &mut rng_from_seed(0));
        assert!(filled);
        assert!(orthonormality_error(&q) < 1e-12);
    }
}
