//! Matrix-free linear operators.
//!
//! Solvers only ever touch a matrix through [`LinearOperator`], so the same
//! code runs on dense matrices, sparse graphs, deflated or dilated operators
//! and Hankel trajectory matrices without materializing them.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix, OrthonormalBasis};

/// A real linear map `R^ncols -> R^nrows`.
pub trait LinearOperator: Send + Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn is_symmetric(&self) -> bool;

    /// Overwrites `y` with `A x`. Panics if the lengths do not match.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// Overwrites `y` with `A^T x`. Symmetric operators reuse `apply_into`.
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        assert!(self.is_symmetric(), "operator does not implement its transpose");
        self.apply_into(x, y);
    }
}

/// Shared, thread-safe operator handle.
pub type SharedOp = Arc<dyn LinearOperator>;

/// Checked, allocating conveniences on top of [`LinearOperator`].
pub trait OperatorExt: LinearOperator {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("input", x.len(), self.ncols())?;
        let mut y = vec![0.0; self.nrows()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("input", x.len(), self.nrows())?;
        let mut y = vec![0.0; self.ncols()];
        self.apply_transpose_into(x, &mut y);
        Ok(y)
    }

    /// Applies the operator to every column of `x`.
    fn apply_block(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("block rows", x.nrows(), self.ncols())?;
        let mut out = DenseMatrix::zeros(self.nrows(), x.ncols());
        for j in 0..x.ncols() {
            self.apply_into(x.col(j), out.col_mut(j));
        }
        Ok(out)
    }

    /// Materializes the operator column by column.
    fn to_dense(&self) -> DenseMatrix {
        let n = self.ncols();
        let mut out = DenseMatrix::zeros(self.nrows(), n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, out.col_mut(j));
            e[j] = 0.0;
        }
        out
    }
}

impl<T: LinearOperator + ?Sized> OperatorExt for T {}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

/// A dense matrix viewed as an operator.
#[derive(Clone, Debug)]
pub struct DenseOp {
    matrix: DenseMatrix,
    symmetric: bool,
}

impl DenseOp {
    /// Wraps a matrix; symmetry is detected up to `1e-12` relative asymmetry.
    pub fn new(matrix: DenseMatrix) -> Self {
        let symmetric = matrix.nrows() == matrix.ncols()
            && matrix.max_asymmetry() <= 1e-12 * matrix.max_abs().max(f64::MIN_POSITIVE);
        Self { matrix, symmetric }
    }

    /// Wraps a matrix that must be symmetric.
    pub fn symmetric(matrix: DenseMatrix) -> Result<Self> {
        let op = Self::new(matrix);
        if !op.symmetric {
            return Err(Error::NotSymmetric(op.matrix.max_asymmetry()));
        }
        Ok(op)
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOp {
    fn nrows(&self) -> usize {
        self.matrix.nrows()
    }
    fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols());
        y.fill(0.0);
        for (j, xj) in x.iter().enumerate() {
            if *xj != 0.0 {
                axpy(*xj, self.matrix.col(j), y);
            }
        }
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows());
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = dot(self.matrix.col(j), x);
        }
    }
}

/// Symmetric sparse matrix in compressed-row form, both triangles stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetric {
    /// Unit-weight adjacency matrix of an undirected simple graph.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let entries: Vec<(usize, usize, f64)> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidEdit(format!("self-loop at vertex {u}")));
            }
        }
        Self::from_weighted(n, &entries)
    }

    /// Builds a symmetric matrix from entries given once per unordered pair
    /// (diagonal entries allowed). Duplicate pairs are rejected.
    pub fn from_weighted(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(u, v, w) in entries {
            if u >= n || v >= n {
                return Err(Error::InvalidEdit(format!("pair ({u}, {v}) out of range for n = {n}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite weight at ({u}, {v})")));
            }
            rows[u].push((v, w));
            if u != v {
                rows[v].push((u, w));
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for (i, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|e| e.0);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidEdit(format!("duplicate entry in row {i}")));
            }
            for &(j, w) in row.iter() {
                indices.push(j);
                values.push(w);
            }
            offsets.push(indices.len());
        }
        Ok(Self { n, offsets, indices, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles).
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, vals) = self.row(i);
        idx.binary_search(&j).map_or(0.0, |p| vals[p])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).0.binary_search(&j).is_ok()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Upper-triangle pairs `(i, j)` with `i < j`, row by row.
    pub fn upper_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.nnz() / 2);
        for i in 0..self.n {
            for &j in self.row(i).0 {
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

impl LinearOperator for SparseSymmetric {
    fn nrows(&self) -> usize {
        self.n
    }
    fn ncols(&self) -> usize {
        self.n
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (idx, vals) = self.row(i);
            *yi = idx.iter().zip(vals).map(|(&j, &w)| w * x[j]).sum();
        }
    }
}

/// How vertex degrees enter the normalization of an adjacency matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DegreeNormalization {
    /// `d_i = rowsum_i + tau`.
    #[default]
    Regularized,
    /// `d_i = rowsum_i`, even when `tau > 0`.
    Raw,
}

/// `D^{-1/2} (A + (tau/n) 1 1^T) D^{-1/2}` with the rank-one part applied
/// analytically.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacencyOp {
    adjacency: Arc<SparseSymmetric>,
    tau: f64,
    degrees: Vec<f64>,
    inv_sqrt: Vec<f64>,
}

impl NormalizedAdjacencyOp {
    pub fn new(adjacency: Arc<SparseSymmetric>, tau: f64) -> Result<Self> {
        Self::with_normalization(adjacency, tau, DegreeNormalization::Regularized)
    }

    pub fn with_normalization(
        adjacency: Arc<SparseSymmetric>,
        tau: f64,
        mode: DegreeNormalization,
    ) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(Error::InvalidArgument(format!("tau must be finite and >= 0, got {tau}")));
        }
        let shift = match mode {
            DegreeNormalization::Regularized => tau,
            DegreeNormalization::Raw => 0.0,
        };
        let degrees: Vec<f64> = adjacency.row_sums().iter().map(|s| s + shift).collect();
        if let Some(i) = degrees.iter().position(|&d| d <= 0.0) {
            return Err(Error::IsolatedVertex(i));
        }
        let inv_sqrt = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
        Ok(Self { adjacency, tau, degrees, inv_sqrt })
    }

    pub fn adjacency(&self) -> &Arc<SparseSymmetric> {
        &self.adjacency
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Degrees used in the normalization.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }
}

impl LinearOperator for NormalizedAdjacencyOp {
    fn nrows(&self) -> usize {
        self.adjacency.n()
    }
    fn ncols(&self) -> usize {
        self.adjacency.n()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.adjacency.n();
        assert_eq!(x.len(), n);
        let s = &self.inv_sqrt;
        let mut spread = 0.0;
        if self.tau > 0.0 {
            spread = (self.tau / n as f64) * dot(s, x);
        }
        for (i, yi) in y.iter_mut().enumerate() {
            let (idx, vals) = self.adjacency.row(i);
            let acc: f64 = idx.iter().zip(vals).map(|(&j, &w)| w * s[j] * x[j]).sum();
            *yi = s[i] * (acc + spread);
        }
    }
}

/// `(I - V V^T) A (I - V V^T)` for a symmetric `A`.
#[derive(Clone)]
pub struct DeflatedOp {
    base: SharedOp,
    locked: OrthonormalBasis,
}

impl DeflatedOp {
    pub fn new(base: SharedOp, locked: OrthonormalBasis) -> Result<Self> {
        if !base.is_symmetric() {
            return Err(Error::NotSymmetric(f64::NAN));
        }
        if locked.dim() != base.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "locked basis in R^{} for an operator of size {}",
                locked.dim(),
                base.nrows()
            )));
        }
        Ok(Self { base, locked })
    }

    pub fn locked(&self) -> &OrthonormalBasis {
        &self.locked
    }
}

impl LinearOperator for DeflatedOp {
    fn nrows(&self) -> usize {
        self.base.nrows()
    }
    fn ncols(&self) -> usize {
        self.base.ncols()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut z = x.to_vec();
        self.locked.project_out(&mut z);
        self.base.apply_into(&z, y);
        self.locked.project_out(y);
    }
}

/// Symmetric dilation `[[0, A], [A^T, 0]]` of an `m x n` operator.
#[derive(Clone)]
pub struct DilationOp {
    inner: SharedOp,
}

impl DilationOp {
    pub fn new(inner: SharedOp) -> Self {
        Self { inner }
    }

    pub fn inner(&self) -> &SharedOp {
        &self.inner
    }
}

impl LinearOperator for DilationOp {
    fn nrows(&self) -> usize {
        self.inner.nrows() + self.inner.ncols()
    }
    fn ncols(&self) -> usize {
        self.nrows()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let m = self.inner.nrows();
        let (x_top, x_bot) = x.split_at(m);
        let (y_top, y_bot) = y.split_at_mut(m);
        self.inner.apply_into(x_bot, y_top);
        self.inner.apply_transpose_into(x_top, y_bot);
    }
}

/// Which Gram product to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramSide {
    /// `A^T A`, acting on the column space of `A^T` (size `ncols`).
    Right,
    /// `A A^T`, acting on the column space of `A` (size `nrows`).
    Left,
}

/// Gram operator `A^T A` or `A A^T`.
#[derive(Clone)]
pub struct GramOp {
    inner: SharedOp,
    side: GramSide,
}

impl GramOp {
    pub fn new(inner: SharedOp, side: GramSide) -> Self {
        Self { inner, side }
    }

    pub fn inner(&self) -> &SharedOp {
        &self.inner
    }
}

impl LinearOperator for GramOp {
    fn nrows(&self) -> usize {
        match self.side {
            GramSide::Right => self.inner.ncols(),
            GramSide::Left => self.inner.nrows(),
        }
    }
    fn ncols(&self) -> usize {
        self.nrows()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        match self.side {
            GramSide::Right => {
                let mut t = vec![0.0; self.inner.nrows()];
                self.inner.apply_into(x, &mut t);
                self.inner.apply_transpose_into(&t, y);
            }
            GramSide::Left => {
                let mut t = vec![0.0; self.inner.ncols()];
                self.inner.apply_transpose_into(x, &mut t);
                self.inner.apply_into(&t, y);
            }
        }
    }
}

/// Scaled Hankel trajectory matrix of a series window: entry `(i, j)` is
/// `s[start + i + j] / sqrt(len)` for `i < window`, `j < len - window + 1`.
#[derive(Clone, Debug)]
pub struct HankelTrajectoryOp {
    series: Arc<Vec<f64>>,
    start: usize,
    len: usize,
    window: usize,
    scale: f64,
}

impl HankelTrajectoryOp {
    /// Trajectory of `series[start .. start + len]` with window `window`.
    pub fn new(series: Arc<Vec<f64>>, start: usize, len: usize, window: usize) -> Result<Self> {
        if window < 2 || window > len || start + len > series.len() {
            return Err(Error::BadWindow { window, len });
        }
        Ok(Self { series, start, len, window, scale: 1.0 / (len as f64).sqrt() })
    }

    /// Operator over the whole series.
    pub fn from_series(series: Vec<f64>, window: usize) -> Result<Self> {
        let len = series.len();
        Self::new(Arc::new(series), 0, len, window)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of lagged columns `K = len - window + 1`.
    pub fn lags(&self) -> usize {
        self.len - self.window + 1
    }

    pub fn segment(&self) -> &[f64] {
        &self.series[self.start..self.start + self.len]
    }

    /// The normalization factor applied to every entry.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `||C||_F^2` computed from the series directly.
    pub fn frobenius_norm_sq(&self) -> f64 {
        let s = self.segment();
        let (w, k) = (self.window, self.lags());
        let mut total = 0.0;
        for (t, v) in s.iter().enumerate() {
            // number of (i, j) with i + j = t
            let lo = t.saturating_sub(k - 1);
            let hi = t.min(w - 1);
            if hi >= lo {
                total += (hi - lo + 1) as f64 * v * v;
            }
        }
        total * self.scale * self.scale
    }
}

impl LinearOperator for HankelTrajectoryOp {
    fn nrows(&self) -> usize {
        self.window
    }
    fn ncols(&self) -> usize {
        self.lags()
    }
    fn is_symmetric(&self) -> bool {
        false
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.lags());
        let s = self.segment();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.scale * dot(&s[i..i + x.len()], x);
        }
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.window);
        let s = self.segment();
        for (j, yj) in y.iter_mut().enumerate() {
            *yj = self.scale * dot(&s[j..j + x.len()], x);
        }
    }
}

/// `sign * z z^T`.
#[derive(Clone, Debug)]
pub struct RankOnePerturbationOp {
    sign: f64,
    z: Vec<f64>,
}

impl RankOnePerturbationOp {
    pub fn new(sign: f64, z: Vec<f64>) -> Result<Self> {
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(Self { sign, z })
    }

    pub fn vector(&self) -> &[f64] {
        &self.z
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }
}

impl LinearOperator for RankOnePerturbationOp {
    fn nrows(&self) -> usize {
        self.z.len()
    }
    fn ncols(&self) -> usize {
        self.z.len()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let c = self.sign * dot(&self.z, x);
        for (yi, zi) in y.iter_mut().zip(&self.z) {
            *yi = c * zi;
        }
    }
}

/// `sum_j w_j f_j f_j^T`, a symmetric operator of low rank.
#[derive(Clone, Debug)]
pub struct LowRankSymmetricOp {
    factors: DenseMatrix,
    weights: Vec<f64>,
}

impl LowRankSymmetricOp {
    pub fn new(factors: DenseMatrix, weights: Vec<f64>) -> Result<Self> {
        if factors.ncols() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors but {} weights",
                factors.ncols(),
                weights.len()
            )));
        }
        Ok(Self { factors, weights })
    }

    pub fn factors(&self) -> &DenseMatrix {
        &self.factors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// A copy with one more term `w f f^T`.
    pub fn with_term(&self, w: f64, f: &[f64]) -> Result<Self> {
        if f.len() != self.factors.nrows() {
            return Err(Error::DimensionMismatch("factor length".into()));
        }
        let mut factors = self.factors.clone();
        factors.push_column(f);
        let mut weights = self.weights.clone();
        weights.push(w);
        Ok(Self { factors, weights })
    }
}

impl LinearOperator for LowRankSymmetricOp {
    fn nrows(&self) -> usize {
        self.factors.nrows()
    }
    fn ncols(&self) -> usize {
        self.factors.nrows()
    }
    fn is_symmetric(&self) -> bool {
        true
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for (j, w) in self.weights.iter().enumerate() {
            let f = self.factors.col(j);
            axpy(w * dot(f, x), f, y);
        }
    }
}

/// `sum_k c_k A_k` over operators of equal shape.
#[derive(Clone)]
pub struct LinearCombinationOp {
    terms: Vec<(f64, SharedOp)>,
    rows: usize,
    cols: usize,
    symmetric: bool,
}

impl LinearCombinationOp {
    pub fn new(terms: Vec<(f64, SharedOp)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidArgument("empty linear combination".into()));
        };
        let (rows, cols) = (first.nrows(), first.ncols());
        if terms.iter().any(|(_, op)| op.nrows() != rows || op.ncols() != cols) {
            return Err(Error::DimensionMismatch("terms of a linear combination differ in shape".into()));
        }
        let symmetric = terms.iter().all(|(_, op)| op.is_symmetric());
        Ok(Self { terms, rows, cols, symmetric })
    }

    /// `a + b`
    pub fn sum(a: SharedOp, b: SharedOp) -> Result<Self> {
        Self::new(vec![(1.0, a), (1.0, b)])
    }

    /// `after - before`
    pub fn difference(after: SharedOp, before: SharedOp) -> Result<Self> {
        Self::new(vec![(1.0, after), (-1.0, before)])
    }

    pub fn terms(&self) -> &[(f64, SharedOp)] {
        &self.terms
    }
}

impl LinearOperator for LinearCombinationOp {
    fn nrows(&self) -> usize {
        self.rows
    }
    fn ncols(&self) -> usize {
        self.cols
    }
    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let mut t = vec![0.0; self.rows];
        for (c, op) in &self.terms {
            op.apply_into(x, &mut t);
            axpy(*c, &t, y);
        }
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        let mut t = vec![0.0; self.cols];
        for (c, op) in &self.terms {
            op.apply_transpose_into(x, &mut t);
            axpy(*c, &t, y);
        }
    }
}

/// `A + shift * I` for a square operator.
#[derive(Clone)]
pub struct ShiftedOp {
    base: SharedOp,
    shift: f64,
}

impl ShiftedOp {
    pub fn new(base: SharedOp, shift: f64) -> Result<Self> {
        if base.nrows() != base.ncols() {
            return Err(Error::DimensionMismatch("shift of a non-square operator".into()));
        }
        Ok(Self { base, shift })
    }
}

impl LinearOperator for ShiftedOp {
    fn nrows(&self) -> usize {
        self.base.nrows()
    }
    fn ncols(&self) -> usize {
        self.base.ncols()
    }
    fn is_symmetric(&self) -> bool {
        self.base.is_symmetric()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply_into(x, y);
        axpy(self.shift, x, y);
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply_transpose_into(x, y);
        axpy(self.shift, x, y);
    }
}

/// Wrapper that counts matrix-vector products (forward and transpose).
pub struct CountingOp {
    inner: SharedOp,
    count: AtomicUsize,
}

impl CountingOp {
    pub fn new(inner: SharedOp) -> Self {
        Self { inner, count: AtomicUsize::new(0) }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }
}

impl LinearOperator for CountingOp {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }
    fn ncols(&self) -> usize {
        self.inner.ncols()
    }
    fn is_symmetric(&self) -> bool {
        self.inner.is_symmetric()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_into(x, y);
    }
    fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_transpose_into(x, y);
    }
}
