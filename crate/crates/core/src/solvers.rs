//! Block eigensolvers for the leading eigenpairs of a symmetric operator,
//! plus the iteration-count bounds used to size warm-started runs.
//!
//! Both solvers count iterations the same way: iteration `k` inspects the
//! subspace reached after `k - 1` block multiplications, so a seed that is
//! already an invariant subspace converges at iteration 1. When `k_max`
//! iterations pass without convergence, one last block multiplication is
//! performed and the result spans `A^{k_max} V0` (subspace iteration) or
//! `span(A V0, ..., A^{k_max} V0)` (block Krylov).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    axpy, dot, norm2, orthonormalize_with_fill, scale_in_place, sym_eig_small, DenseMatrix,
    OrthonormalBasis, DROP_TOL,
};
use crate::operators::{LinearOperator, OperatorExt};
use crate::rng::{gaussian_matrix, gaussian_vector, rng_from_seed, Rng};

/// Which block method to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SubspaceIteration,
    BlockKrylov,
}

/// Which end of the spectrum counts as "leading".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Eigenvalues of largest absolute value.
    #[default]
    LargestMagnitude,
    /// Largest eigenvalues in signed order. Block Krylov only.
    LargestAlgebraic,
}

/// Solver parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Number of eigenpairs wanted.
    pub target_r: usize,
    /// Iterated block width (`>= target_r`).
    pub block: usize,
    pub k_max: usize,
    /// Residual tolerance, relative to `residual_scale` if set and to
    /// `max(1, |theta_1|)` otherwise.
    pub tol: f64,
    pub residual_scale: Option<f64>,
    /// A second Gram-Schmidt pass runs whenever a column keeps less than
    /// this fraction of its norm after the first pass.
    pub reorth_tol: f64,
    pub target: Target,
    /// Skip convergence checks and run exactly `k_max` iterations.
    pub fixed_iterations: bool,
    /// Largest Krylov basis before a thick restart; 0 picks a default.
    pub max_basis: usize,
    /// Seed for random replacement directions.
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(method: Method, target_r: usize) -> Self {
        Self {
            method,
            target_r,
            block: target_r,
            k_max: 100,
            tol: 1e-8,
            residual_scale: None,
            reorth_tol: std::f64::consts::FRAC_1_SQRT_2,
            target: Target::LargestMagnitude,
            fixed_iterations: false,
            max_basis: 0,
            seed: 0,
        }
    }

    fn validate(&self, op: &dyn LinearOperator, v0: &OrthonormalBasis) -> Result<()> {
        let n = op.nrows();
        if op.ncols() != n {
            return Err(Error::DimensionMismatch(format!("operator is {}x{}", n, op.ncols())));
        }
        if !op.is_symmetric() {
            return Err(Error::NotSymmetric(f64::NAN));
        }
        if self.target_r == 0 || self.block < self.target_r {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= target_r <= block, got target_r = {}, block = {}",
                self.target_r, self.block
            )));
        }
        if self.block > n || v0.dim() != n || v0.rank() != self.block {
            return Err(Error::DimensionMismatch(format!(
                "start block is {}x{}, expected {}x{}",
                v0.dim(),
                v0.rank(),
                n,
                self.block
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if matches!(self.residual_scale, Some(s) if !(s > 0.0)) {
            return Err(Error::InvalidArgument("residual_scale must be positive".into()));
        }
        if self.method == Method::SubspaceIteration && self.target == Target::LargestAlgebraic {
            return Err(Error::InvalidArgument(
                "subspace iteration converges by magnitude; use block Krylov for algebraic targets".into(),
            ));
        }
        Ok(())
    }

    fn threshold(&self, values: &[f64]) -> f64 {
        let scale = self
            .residual_scale
            .unwrap_or_else(|| values.iter().fold(1.0f64, |m, v| m.max(v.abs())));
        self.tol * scale
    }
}

/// Output of a block eigensolve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    /// Ritz vectors of the selected pairs, ordered like `ritz_values`.
    pub basis: OrthonormalBasis,
    /// Selected Ritz values in descending algebraic order.
    pub ritz_values: Vec<f64>,
    pub iterations_used: usize,
    /// `||A v_i - theta_i v_i||` for each selected pair.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    /// Vector products with the operator.
    pub matvecs: usize,
    /// True if a collapsed direction had to be replaced by a random one.
    pub reinflated: bool,
}

/// A Gaussian `n x k` block with orthonormalized columns.
pub fn random_orthonormal_init(n: usize, k: usize, seed: u64) -> Result<OrthonormalBasis> {
    if k > n {
        return Err(Error::DimensionMismatch(format!("cannot fit {k} orthonormal columns in R^{n}")));
    }
    let mut rng = rng_from_seed(seed);
    let g = gaussian_matrix(&mut rng, n, k);
    let (q, _) = orthonormalize_with_fill(&g, &mut rng);
    Ok(OrthonormalBasis::from_trusted(q))
}

/// Rayleigh-Ritz on `span(V)`: all Ritz pairs, values descending.
pub fn rayleigh_ritz(op: &dyn LinearOperator, v: &OrthonormalBasis) -> Result<(OrthonormalBasis, Vec<f64>)> {
    if !op.is_symmetric() {
        return Err(Error::NotSymmetric(f64::NAN));
    }
    let av = op.apply_block(v.matrix())?;
    let (s, values) = projected_eigs(v.matrix(), &av)?;
    let rotated = v.matrix().matmul(&s)?;
    Ok((OrthonormalBasis::from_trusted(rotated), values))
}

fn projected_eigs(v: &DenseMatrix, av: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let h = v.tr_matmul(av)?.symmetrized();
    let spec = sym_eig_small(&h)?;
    Ok((spec.vectors, spec.values))
}

/// Indices of the `r` wanted values (given in descending order), returned ascending.
fn select(values: &[f64], target: Target, r: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if target == Target::LargestMagnitude {
        idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    }
    idx.truncate(r);
    idx.sort_unstable();
    idx
}

struct Selected {
    vectors: DenseMatrix,
    values: Vec<f64>,
    residuals: Vec<f64>,
}

/// Rotates `(v, av)` by the selected Ritz vectors of `t = v^T A v` and
/// measures residuals.
fn extract(v: &DenseMatrix, av: &DenseMatrix, t: &DenseMatrix, cfg: &SolverConfig) -> Result<Selected> {
    let spec = sym_eig_small(&t.symmetrized())?;
    let sel = select(&spec.values, cfg.target, cfg.target_r);
    let s = spec.vectors.select_columns(&sel);
    let vectors = v.matmul(&s)?;
    let avs = av.matmul(&s)?;
    let values: Vec<f64> = sel.iter().map(|&i| spec.values[i]).collect();
    let residuals = (0..sel.len())
        .map(|j| {
            let mut r = avs.col(j).to_vec();
            axpy(-values[j], vectors.col(j), &mut r);
            norm2(&r)
        })
        .collect();
    Ok(Selected { vectors, values, residuals })
}

fn finish(sel: Selected, cfg: &SolverConfig, iterations_used: usize, matvecs: usize, reinflated: bool) -> SolveResult {
    let thresh = cfg.threshold(&sel.values);
    let converged = sel.residuals.iter().all(|r| *r <= thresh);
    let (q, _) = orthonormalize_with_fill(&sel.vectors, &mut rng_from_seed(cfg.seed ^ 0xA5A5));
    SolveResult {
        basis: OrthonormalBasis::from_trusted(q),
        ritz_values: sel.values,
        iterations_used,
        residual_norms: sel.residuals,
        converged,
        matvecs,
        reinflated,
    }
}

/// Dispatches to the configured method.
pub fn solve(op: &dyn LinearOperator, v0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    match cfg.method {
        Method::SubspaceIteration => subspace_iteration(op, v0, cfg),
        Method::BlockKrylov => block_krylov(op, v0, cfg),
    }
}

/// Block power iteration with a Rayleigh-Ritz rotation at every check.
pub fn subspace_iteration(op: &dyn LinearOperator, v0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate(op, v0)?;
    let width = cfg.block;
    let mut rng = rng_from_seed(cfg.seed);
    let mut v = v0.matrix().clone();
    let mut av = op.apply_block(&v)?;
    let mut matvecs = width;
    let mut reinflated = false;
    for k in 1..=cfg.k_max {
        if !cfg.fixed_iterations {
            let t = v.tr_matmul(&av)?;
            let sel = extract(&v, &av, &t, cfg)?;
            if sel.residuals.iter().all(|r| *r <= cfg.threshold(&sel.values)) {
                return Ok(finish(sel, cfg, k, matvecs, reinflated));
            }
        }
        let (q, filled) = orthonormalize_with_fill(&av, &mut rng);
        reinflated |= filled;
        v = q;
        av = op.apply_block(&v)?;
        matvecs += width;
    }
    let t = v.tr_matmul(&av)?;
    let sel = extract(&v, &av, &t, cfg)?;
    Ok(finish(sel, cfg, cfg.k_max, matvecs, reinflated))
}

/// Block Lanczos with full reorthogonalization and thick restarts.
///
/// The Krylov space is grown from `A V0`, so with `k_max = 1` the result
/// coincides with one step of subspace iteration.
pub fn block_krylov(op: &dyn LinearOperator, v0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate(op, v0)?;
    let n = op.nrows();
    let b = cfg.block;
    let max_basis = if cfg.max_basis == 0 { (20 * b).max(60).min(n) } else { cfg.max_basis.max(2 * b).min(n) };
    let keep_on_restart = (2 * b).max(cfg.target_r + b).min(max_basis.saturating_sub(b)).max(cfg.target_r);
    let mut rng = rng_from_seed(cfg.seed);

    let v = v0.matrix();
    let av0 = op.apply_block(v)?;
    let mut matvecs = b;
    if !cfg.fixed_iterations {
        let t = v.tr_matmul(&av0)?;
        let sel = extract(v, &av0, &t, cfg)?;
        if sel.residuals.iter().all(|r| *r <= cfg.threshold(&sel.values)) {
            return Ok(finish(sel, cfg, 1, matvecs, false));
        }
    }

    let empty = DenseMatrix::zeros(n, 0);
    let (first, mut reinflated) = extend_basis(&empty, &av0, b.min(n), cfg.reorth_tol, &mut rng);
    let mut basis = first;
    let mut abasis = op.apply_block(&basis)?;
    matvecs += basis.ncols();
    let mut t = basis.tr_matmul(&abasis)?;
    let mut last_start = 0;
    let mut iterations = cfg.k_max;

    for k in 2..=cfg.k_max {
        let d = basis.ncols();
        let check_now = d <= 300 || k % 4 == 0;
        if !cfg.fixed_iterations && check_now {
            let sel = extract(&basis, &abasis, &t, cfg)?;
            if sel.residuals.iter().all(|r| *r <= cfg.threshold(&sel.values)) {
                return Ok(finish(sel, cfg, k, matvecs, reinflated));
            }
        }
        if d >= n {
            iterations = k;
            break;
        }
        let width = b.min(n - d);
        let last = DenseMatrix::from_fn(n, abasis.ncols() - last_start, |i, j| abasis[(i, last_start + j)]);
        let (next, filled) = extend_basis(&basis, &last, width, cfg.reorth_tol, &mut rng);
        reinflated |= filled;
        if d + width > max_basis {
            let spec = sym_eig_small(&t.symmetrized())?;
            let keep = select(&spec.values, cfg.target, keep_on_restart.min(d));
            let s = spec.vectors.select_columns(&keep);
            basis = basis.matmul(&s)?;
            abasis = abasis.matmul(&s)?;
            t = basis.tr_matmul(&abasis)?;
        }
        let anext = op.apply_block(&next)?;
        matvecs += next.ncols();
        let old = basis.ncols();
        last_start = old;
        basis = basis.hcat(&next)?;
        abasis = abasis.hcat(&anext)?;
        t = grow_projection(&t, &basis, &anext, old)?;
    }
    let sel = extract(&basis, &abasis, &t, cfg)?;
    Ok(finish(sel, cfg, iterations, matvecs, reinflated))
}

/// Extends the projected matrix `t = B^T A B` after `B` gained columns from
/// index `old` on, using the new block `a_new = A B[:, old..]`.
fn grow_projection(t: &DenseMatrix, basis: &DenseMatrix, a_new: &DenseMatrix, old: usize) -> Result<DenseMatrix> {
    let d = basis.ncols();
    let cross = basis.tr_matmul(a_new)?;
    let mut out = DenseMatrix::zeros(d, d);
    for j in 0..old {
        for i in 0..old {
            out[(i, j)] = t[(i, j)];
        }
    }
    for j in 0..a_new.ncols() {
        for i in 0..d {
            out[(i, old + j)] = cross[(i, j)];
            out[(old + j, i)] = cross[(i, j)];
        }
    }
    Ok(out)
}

/// Orthonormalizes `w` against `basis` (and itself) with selective second
/// passes, producing exactly `width` new columns. Collapsed columns are
/// replaced with random directions.
fn extend_basis(basis: &DenseMatrix, w: &DenseMatrix, width: usize, reorth_tol: f64, rng: &mut Rng) -> (DenseMatrix, bool) {
    let n = basis.nrows();
    let mut out = DenseMatrix::zeros(n, 0);
    let mut filled = false;
    let project = |x: &mut Vec<f64>, out: &DenseMatrix| {
        for c in 0..basis.ncols() {
            let q = basis.col(c);
            axpy(-dot(q, x), q, x);
        }
        for c in 0..out.ncols() {
            let q = out.col(c);
            axpy(-dot(q, x), q, x);
        }
    };
    let mut candidates = (0..w.ncols()).map(|j| w.col(j).to_vec()).collect::<Vec<_>>().into_iter();
    while out.ncols() < width {
        let (mut x, random) = match candidates.next() {
            Some(c) => (c, false),
            None => (gaussian_vector(rng, n), true),
        };
        let original = norm2(&x);
        project(&mut x, &out);
        let mut kept = norm2(&x);
        if kept < reorth_tol * original {
            project(&mut x, &out);
            kept = norm2(&x);
        }
        let floor = if random { 1e-8 } else { DROP_TOL };
        if original == 0.0 || kept <= floor * original {
            continue;
        }
        scale_in_place(1.0 / kept, &mut x);
        out.push_column(&x);
        filled |= random;
    }
    (out, filled)
}

fn ceil_count(x: f64) -> usize {
    if x <= 0.0 {
        0
    } else {
        // `as` saturates for huge or infinite values.
        x.ceil() as usize
    }
}

/// Iterations needed to reach accuracy `eps` from a warm start at distance `d`
/// when the convergence ratio is `rho`.
///
/// With `Delta = d / sqrt(1 - d^2)`: subspace iteration needs
/// `ceil(ln(Delta/eps) / ln(rho))`, block Krylov
/// `ceil((1 + log2(Delta/eps)) / sqrt(rho - 1))`. Returns 0 when `d <= eps`.
pub fn kmax_warm(d: f64, rho: f64, eps: f64, method: Method) -> Result<usize> {
    if !(rho > 1.0) {
        return Err(Error::InvalidRate(rho));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(0.0..1.0).contains(&d) {
        return Err(Error::InvalidArgument(format!("distance must lie in [0, 1), got {d}")));
    }
    if d <= eps {
        return Ok(0);
    }
    let delta = d / (1.0 - d * d).sqrt();
    let k = match method {
        Method::SubspaceIteration => (delta / eps).ln() / rho.ln(),
        Method::BlockKrylov => (1.0 + (delta / eps).log2()) / (rho - 1.0).sqrt(),
    };
    Ok(ceil_count(k))
}

/// Iteration count from a Gaussian start with relative gap `gamma`:
/// `ceil(ln(C/eps) / ln(1 + gamma))` for subspace iteration and
/// `ceil(ln(C/eps) / sqrt(gamma))` for block Krylov.
pub fn kmax_gaussian(gamma: f64, eps: f64, constant: f64, method: Method) -> Result<usize> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if !(eps > 0.0) || !(constant >= 1.0) {
        return Err(Error::InvalidArgument("need eps > 0 and C >= 1".into()));
    }
    let log_ratio = (constant / eps).ln();
    let k = match method {
        Method::SubspaceIteration => log_ratio / gamma.ln_1p(),
        Method::BlockKrylov => log_ratio / gamma.sqrt(),
    };
    Ok(ceil_count(k))
}
