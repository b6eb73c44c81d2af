//! The incremental tracking loop.
//!
//! A [`TrackerState`] holds an estimate of the leading `r`-dimensional
//! eigenspace of the current operator together with estimates of the next
//! `q` eigenvalues. Each [`TrackerState::step`] receives the perturbation
//! `E = A_t - A_{t-1}`, bounds how far the true eigenspace can have moved,
//! and either keeps the estimate or refreshes it with a warm-started solve
//! whose iteration budget comes from the bound.

use std::collections::VecDeque;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{orthogonalize_against, spectral_norm_estimate, sym_eig_small, OrthonormalBasis};
use crate::operators::{DeflatedOp, LinearCombinationOp, OperatorExt, SharedOp};
use crate::rng::{gaussian_matrix, rng_from_seed, split_seed};
use crate::solvers::{kmax_gaussian, kmax_warm, random_orthonormal_init, solve, Method, SolveResult, SolverConfig, Target};

/// How a refresh decides to stop iterating.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stopping {
    /// Stop once the a-posteriori residual bound certifies accuracy `eps`.
    #[default]
    Certified,
    /// Run exactly the bound-prescribed number of iterations.
    Bound,
    /// Stop once every residual is below `eps * max(1, |theta_1|)`.
    Residual,
}

/// Tracker parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Initial dimension of the tracked eigenspace.
    pub r: usize,
    /// Number of higher-order eigenvalues estimated after each refresh.
    pub q: usize,
    /// Target accuracy in subspace distance.
    pub eps: f64,
    pub method: Method,
    pub high_order_method: Method,
    pub target: Target,
    pub stopping: Stopping,
    /// Resize only after this many consecutive identical size proposals.
    pub hysteresis: usize,
    pub adaptive_rank: bool,
    pub min_rank: usize,
    /// Upper limit on the tracked dimension; 0 means `n - q`.
    pub max_rank: usize,
    /// Hard cap on iterations of any single solve.
    pub hard_cap: usize,
    /// Constant `C` of the Gaussian-start iteration count.
    pub gaussian_constant: f64,
    /// Relative gap assumed by the Gaussian-start count when no rate is known.
    pub gamma: f64,
    pub norm_tol: f64,
    pub norm_max_iter: usize,
    /// Re-estimate `||A_t - A_s||` directly instead of summing batch norms.
    pub exact_reestimate: bool,
    /// Absolute residual tolerance of the higher-order solve; defaults to `eps * rho_hat`.
    pub high_order_tol: Option<f64>,
    /// Solve every step from a random start (baseline mode).
    pub cold_start: bool,
    pub seed: u64,
}

impl TrackerConfig {
    pub fn new(r: usize, eps: f64) -> Self {
        Self {
            r,
            q: 5,
            eps,
            method: Method::SubspaceIteration,
            high_order_method: Method::BlockKrylov,
            target: Target::LargestMagnitude,
            stopping: Stopping::Certified,
            hysteresis: 5,
            adaptive_rank: true,
            min_rank: 2,
            max_rank: 0,
            hard_cap: 500,
            gaussian_constant: 10.0,
            gamma: 0.1,
            norm_tol: 1e-4,
            norm_max_iter: 300,
            exact_reestimate: false,
            high_order_tol: None,
            cold_start: false,
            seed: 0,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.r == 0 || self.q == 0 {
            return Err(Error::InvalidArgument("r and q must be positive".into()));
        }
        if self.r + self.q > n {
            return Err(Error::DimensionMismatch(format!(
                "r + q = {} exceeds the dimension {n}",
                self.r + self.q
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.hard_cap == 0 || self.hysteresis == 0 {
            return Err(Error::InvalidArgument("hard_cap and hysteresis must be positive".into()));
        }
        if self.target == Target::LargestAlgebraic
            && (self.method == Method::SubspaceIteration || self.high_order_method == Method::SubspaceIteration)
        {
            return Err(Error::InvalidArgument("algebraic targets need block Krylov solves".into()));
        }
        Ok(())
    }
}

/// Current estimate of the tracked eigenspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceEstimate {
    pub basis: OrthonormalBasis,
    /// Ritz values, descending algebraic order, aligned with the basis columns.
    pub ritz_values: Vec<f64>,
    pub residual_norms: Vec<f64>,
    /// Accuracy the estimate is known to have (a-posteriori bound, capped at 1).
    pub certified_eps: f64,
}

/// A perturbation to apply in one tracking step.
#[derive(Clone)]
pub struct TrackerUpdate {
    /// `E = A_t - A_{t-1}`.
    pub perturbation: SharedOp,
    /// `A_t` itself, when the caller can build it directly. Without it the
    /// tracker uses the lazy sum `A_{t-1} + E`.
    pub next_operator: Option<SharedOp>,
}

impl TrackerUpdate {
    pub fn new(perturbation: SharedOp) -> Self {
        Self { perturbation, next_operator: None }
    }

    pub fn with_next(perturbation: SharedOp, next_operator: SharedOp) -> Self {
        Self { perturbation, next_operator: Some(next_operator) }
    }
}

/// Davis-Kahan style bound on how far the eigenspace may have moved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxyBound {
    pub d_t: f64,
    /// False when the gap or perturbation size invalidates the bound; `d_t` is then 1.
    pub applicable: bool,
}

/// Bound on the distance between the tracked estimate and the eigenspace of
/// the perturbed operator:
///
/// `d_t = 2 sqrt(eps * e^2 + ev^2) / (lam_r - lam_r1 - 3 eps^2 rho)`,
///
/// valid only when that denominator is positive and `e` is less than half of
/// it. Results are clamped to `[0, 1]`.
pub fn davis_kahan_proxy(e_norm: f64, ev_norm: f64, lam_r: f64, lam_r1: f64, eps: f64, rho_hat: f64) -> Result<ProxyBound> {
    for (name, v) in [("e_norm", e_norm), ("ev_norm", ev_norm), ("eps", eps), ("rho_hat", rho_hat)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if !lam_r.is_finite() || !lam_r1.is_finite() {
        return Err(Error::InvalidArgument("eigenvalue estimates must be finite".into()));
    }
    let denom = lam_r - lam_r1 - 3.0 * eps * eps * rho_hat;
    if !(denom > 0.0) || e_norm >= denom / 2.0 {
        return Ok(ProxyBound { d_t: 1.0, applicable: false });
    }
    let d = 2.0 * (eps * e_norm * e_norm + ev_norm * ev_norm).sqrt() / denom;
    Ok(ProxyBound { d_t: d.clamp(0.0, 1.0), applicable: true })
}

/// Estimated convergence ratio of a warm-started solve on the perturbed
/// operator: `(lam_r - e - rho eps^2) / (lam_r1 + e + 2 rho eps^2)`.
pub fn convergence_ratio(lam_r: f64, lam_r1: f64, e_norm: f64, eps: f64, rho_hat: f64) -> Result<f64> {
    let den = lam_r1 + e_norm + 2.0 * rho_hat * eps * eps;
    if !(den > 0.0) {
        return Err(Error::NonpositiveDenominator(den));
    }
    Ok((lam_r - e_norm - rho_hat * eps * eps) / den)
}

/// Dimension `i` (2 <= i <= len - 1, 1-based) minimizing `|lam_{i+1} / lam_i|`.
///
/// Ties go to the smallest `i`; entries with `lam_i = 0` are skipped.
pub fn candidate_size(values: &[f64]) -> Result<usize> {
    if values.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 values, got {}", values.len())));
    }
    let mut best: Option<(usize, f64)> = None;
    for i in 2..values.len() {
        let (num, den) = (values[i], values[i - 1]);
        if den == 0.0 {
            continue;
        }
        let ratio = (num / den).abs();
        if best.is_none_or(|(_, b)| ratio < b) {
            best = Some((i, ratio));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| Error::DegenerateSpectrum("all candidate denominators are zero".into()))
}

/// Outcome of a size proposal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SizeDecision {
    Keep,
    Resize(usize),
}

/// The last few size proposals that differed from the current dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeHistory {
    window: usize,
    entries: VecDeque<usize>,
}

impl SizeHistory {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(1), entries: VecDeque::new() }
    }

    pub fn entries(&self) -> impl Iterator<Item = &usize> {
        self.entries.iter()
    }
}

/// Records the proposal `r_c` for current size `r`; resizes once the last
/// `window` proposals agree on the same new size.
pub fn apply_size_hysteresis(history: &mut SizeHistory, r: usize, r_c: usize) -> SizeDecision {
    if r_c == r {
        history.entries.clear();
        return SizeDecision::Keep;
    }
    history.entries.push_back(r_c);
    while history.entries.len() > history.window {
        history.entries.pop_front();
    }
    if history.entries.len() == history.window && history.entries.iter().all(|&c| c == r_c) {
        history.entries.clear();
        return SizeDecision::Resize(r_c);
    }
    SizeDecision::Keep
}

/// What happened in one step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepReport {
    /// 1-based step counter.
    pub step: usize,
    /// Bound on the perturbation accumulated since the last refresh.
    pub e_norm: f64,
    pub e_batch_norm: f64,
    pub e_norm_converged: bool,
    pub ev_norm: f64,
    pub d_t: f64,
    pub proxy_applicable: bool,
    pub rho_t: Option<f64>,
    /// Iteration budget from the bound; `None` on skipped steps.
    pub kmax_bound: Option<usize>,
    pub iterations_core: usize,
    pub iterations_high: usize,
    pub iterations_resize: usize,
    pub matvecs_core: usize,
    pub matvecs_high: usize,
    pub r_before: usize,
    pub r_after: usize,
    pub r_candidate: Option<usize>,
    pub skipped: bool,
    /// The warm-start bound did not apply and the solve ran to the hard cap.
    pub fell_back: bool,
    pub converged: bool,
    pub certified_eps: f64,
    pub lam_r: f64,
    pub lam_r1: f64,
    pub rho_hat: f64,
    pub wall_core_ms: f64,
    pub wall_high_ms: f64,
}

/// Tracker state. Steps return a new state and leave `self` untouched, so a
/// failing step never corrupts the estimate.
#[derive(Clone)]
pub struct TrackerState {
    config: TrackerConfig,
    operator: SharedOp,
    refresh_operator: SharedOp,
    core: SubspaceEstimate,
    high_order: Vec<f64>,
    rho_at_refresh: f64,
    pending: Option<SharedOp>,
    pending_norm: f64,
    history: SizeHistory,
    step_index: usize,
}

/// Solves for the initial estimate on `op`.
pub fn init_tracker(op: SharedOp, config: TrackerConfig) -> Result<TrackerState> {
    TrackerState::new(op, config)
}

fn gap_pair(core: &[f64], high: &[f64], target: Target) -> (f64, f64) {
    match target {
        Target::LargestMagnitude => (
            core.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())),
            high.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        ),
        Target::LargestAlgebraic => (
            core.iter().copied().fold(f64::INFINITY, f64::min),
            high.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    }
}

fn spectral_radius(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn frobenius(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Puts a solve result in target order (by magnitude for magnitude targets).
fn ordered(res: &SolveResult, target: Target) -> (OrthonormalBasis, Vec<f64>, Vec<f64>) {
    let mut idx: Vec<usize> = (0..res.ritz_values.len()).collect();
    if target == Target::LargestMagnitude {
        idx.sort_by(|&a, &b| res.ritz_values[b].abs().total_cmp(&res.ritz_values[a].abs()).then(a.cmp(&b)));
    }
    let basis = OrthonormalBasis::from_trusted(res.basis.matrix().select_columns(&idx));
    let values = idx.iter().map(|&i| res.ritz_values[i]).collect();
    let residuals = idx.iter().map(|&i| res.residual_norms[i]).collect();
    (basis, values, residuals)
}

struct HighOrder {
    values: Vec<f64>,
    iterations: usize,
    matvecs: usize,
}

impl TrackerState {
    pub fn new(op: SharedOp, config: TrackerConfig) -> Result<Self> {
        let n = op.nrows();
        if op.ncols() != n {
            return Err(Error::DimensionMismatch(format!("operator is {n}x{}", op.ncols())));
        }
        if !op.is_symmetric() {
            return Err(Error::NotSymmetric(f64::NAN));
        }
        config.validate(n)?;
        let r = config.r;
        let init_cap = config.hard_cap.saturating_mul(4);
        let v0 = random_orthonormal_init(n, r, split_seed(config.seed, 0))?;
        let mut scfg = SolverConfig::new(config.method, r);
        scfg.k_max = init_cap;
        scfg.tol = config.eps;
        scfg.target = config.target;
        scfg.seed = split_seed(config.seed, 1);
        let mut res = solve(op.as_ref(), &v0, &scfg)?;
        let mut rho = 0.0;
        let mut high = Vec::new();
        let mut post = 1.0;
        for round in 0..4u64 {
            rho = spectral_radius(&res.ritz_values) * (1.0 + config.eps * config.eps)
                + res.residual_norms.iter().copied().fold(0.0, f64::max);
            let h = Self::solve_high_order(&op, &res.basis, &config, rho, split_seed(config.seed, 2 + round))?;
            high = h.values;
            let (lam_r, lam_r1) = gap_pair(&res.ritz_values, &high, config.target);
            let delta = lam_r - lam_r1 - 2.0 * rho * config.eps * config.eps;
            post = if delta > 0.0 { (frobenius(&res.residual_norms) / delta).min(1.0) } else { 1.0 };
            if post <= config.eps || config.stopping == Stopping::Residual || delta <= 0.0 {
                break;
            }
            scfg.tol = config.eps * delta / (r as f64).sqrt();
            scfg.residual_scale = Some(1.0);
            scfg.seed = split_seed(config.seed, 10 + round);
            res = solve(op.as_ref(), &res.basis, &scfg)?;
        }
        let (basis, ritz_values, residual_norms) = ordered(&res, config.target);
        let history = SizeHistory::new(config.hysteresis);
        Ok(Self {
            core: SubspaceEstimate { basis, ritz_values, residual_norms, certified_eps: post },
            high_order: high,
            rho_at_refresh: rho,
            refresh_operator: op.clone(),
            operator: op,
            pending: None,
            pending_norm: 0.0,
            history,
            step_index: 0,
            config,
        })
    }

    fn solve_high_order(op: &SharedOp, basis: &OrthonormalBasis, config: &TrackerConfig, rho: f64, seed: u64) -> Result<HighOrder> {
        let n = op.nrows();
        let q = config.q.min(n - basis.rank());
        let deflated = DeflatedOp::new(op.clone(), basis.clone())?;
        let v0 = random_orthonormal_init(n, q, seed)?;
        let mut cfg = SolverConfig::new(config.high_order_method, q);
        cfg.k_max = config.hard_cap;
        cfg.tol = config.high_order_tol.unwrap_or(config.eps * rho.max(f64::MIN_POSITIVE));
        cfg.residual_scale = Some(1.0);
        cfg.target = config.target;
        cfg.seed = split_seed(seed, 1);
        let res = solve(&deflated, &v0, &cfg)?;
        let (_, values, _) = ordered(&res, config.target);
        Ok(HighOrder { values, iterations: res.iterations_used, matvecs: res.matvecs })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Tracked basis, columns ordered like [`Self::ritz_values`].
    pub fn basis(&self) -> &OrthonormalBasis {
        &self.core.basis
    }

    /// Ritz values of the tracked pairs, largest (by the target order) first.
    pub fn ritz_values(&self) -> &[f64] {
        &self.core.ritz_values
    }

    pub fn estimate(&self) -> &SubspaceEstimate {
        &self.core
    }

    /// Estimates of the next `q` eigenvalues at the last refresh.
    pub fn high_order_values(&self) -> &[f64] {
        &self.high_order
    }

    pub fn rank(&self) -> usize {
        self.core.basis.rank()
    }

    /// Upper estimate of the spectral radius of the current operator.
    pub fn rho_hat(&self) -> f64 {
        self.rho_at_refresh + self.pending_norm
    }

    pub fn operator(&self) -> &SharedOp {
        &self.operator
    }

    /// The operator the estimate was last refreshed on.
    pub fn refresh_operator(&self) -> &SharedOp {
        &self.refresh_operator
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn size_history(&self) -> &SizeHistory {
        &self.history
    }

    /// Tracked eigenvalue and first higher-order eigenvalue used in the gap.
    pub fn gap_values(&self) -> (f64, f64) {
        gap_pair(&self.core.ritz_values, &self.high_order, self.config.target)
    }

    /// Processes one perturbation and returns the new state with a report.
    pub fn step(&self, update: &TrackerUpdate) -> Result<(TrackerState, StepReport)> {
        let cfg = &self.config;
        let n = self.operator.nrows();
        let e = &update.perturbation;
        if e.nrows() != n || e.ncols() != n {
            return Err(Error::DimensionMismatch(format!("perturbation is {}x{}, expected {n}x{n}", e.nrows(), e.ncols())));
        }
        if !e.is_symmetric() {
            return Err(Error::NotSymmetric(f64::NAN));
        }
        if let Some(next) = &update.next_operator {
            if next.nrows() != n || next.ncols() != n || !next.is_symmetric() {
                return Err(Error::DimensionMismatch("next operator has the wrong shape or is not symmetric".into()));
            }
        }
        let step = self.step_index + 1;
        let seed = split_seed(cfg.seed, 1000 + step as u64);
        let next: SharedOp = match &update.next_operator {
            Some(op) => op.clone(),
            None => Arc::new(LinearCombinationOp::sum(self.operator.clone(), e.clone())?),
        };
        let accumulated: SharedOp = match (&update.next_operator, &self.pending) {
            (Some(op), Some(_)) => Arc::new(LinearCombinationOp::difference(op.clone(), self.refresh_operator.clone())?),
            (None, Some(p)) => Arc::new(LinearCombinationOp::sum(p.clone(), e.clone())?),
            (_, None) => e.clone(),
        };

        let batch = spectral_norm_estimate(e.as_ref(), cfg.norm_tol, cfg.norm_max_iter, split_seed(seed, 1))?;
        let (e_norm, e_converged) = if cfg.exact_reestimate && self.pending.is_some() {
            let est = spectral_norm_estimate(accumulated.as_ref(), cfg.norm_tol, cfg.norm_max_iter, split_seed(seed, 2))?;
            (est.value, est.converged)
        } else {
            (self.pending_norm + batch.value, batch.converged)
        };
        let ev = accumulated.apply_block(self.core.basis.matrix())?;
        let ev_gram = ev.tr_matmul(&ev)?.symmetrized();
        let ev_norm = sym_eig_small(&ev_gram)?.values.first().copied().unwrap_or(0.0).max(0.0).sqrt();

        let (lam_r, lam_r1) = self.gap_values();
        let rho = self.rho_at_refresh;
        let proxy = davis_kahan_proxy(e_norm, ev_norm, lam_r, lam_r1, cfg.eps, rho)?;
        let rho_t = convergence_ratio(lam_r, lam_r1, e_norm, cfg.eps, rho).ok();
        let r_before = self.rank();

        let mut report = StepReport {
            step,
            e_norm,
            e_batch_norm: batch.value,
            e_norm_converged: e_converged,
            ev_norm,
            d_t: proxy.d_t,
            proxy_applicable: proxy.applicable,
            rho_t,
            kmax_bound: None,
            iterations_core: 0,
            iterations_high: 0,
            iterations_resize: 0,
            matvecs_core: 0,
            matvecs_high: 0,
            r_before,
            r_after: r_before,
            r_candidate: None,
            skipped: false,
            fell_back: false,
            converged: true,
            certified_eps: self.core.certified_eps,
            lam_r,
            lam_r1,
            rho_hat: rho + e_norm,
            wall_core_ms: 0.0,
            wall_high_ms: 0.0,
        };

        if !cfg.cold_start && proxy.applicable && proxy.d_t + self.core.certified_eps <= cfg.eps {
            report.skipped = true;
            let mut out = self.clone();
            out.operator = next;
            out.pending = Some(accumulated);
            out.pending_norm = e_norm;
            out.step_index = step;
            return Ok((out, report));
        }

        let warm = !cfg.cold_start && proxy.applicable && proxy.d_t < 1.0 && rho_t.is_some_and(|x| x > 1.0);
        let kmax_bound = if warm {
            kmax_warm(proxy.d_t, rho_t.unwrap_or(f64::NAN), cfg.eps, cfg.method)?.max(1)
        } else {
            let gamma = match rho_t {
                Some(x) if x > 1.0 => x - 1.0,
                _ => cfg.gamma,
            };
            kmax_gaussian(gamma, cfg.eps, cfg.gaussian_constant, cfg.method)?.max(1)
        };
        report.kmax_bound = Some(kmax_bound);
        report.fell_back = !warm && !cfg.cold_start;

        let r = r_before;
        let mut scfg = SolverConfig::new(cfg.method, r);
        scfg.target = cfg.target;
        scfg.seed = split_seed(seed, 3);
        let v0 = if cfg.cold_start {
            random_orthonormal_init(n, r, split_seed(seed, 4))?
        } else {
            self.core.basis.clone()
        };
        scfg.k_max = if warm { kmax_bound.min(cfg.hard_cap) } else { cfg.hard_cap };
        let gap_estimate = (lam_r - e_norm) - (lam_r1 + e_norm) - 3.0 * rho * cfg.eps * cfg.eps;
        self.set_stopping(&mut scfg, warm, gap_estimate, lam_r, lam_r1);

        let t0 = Instant::now();
        let res = solve(next.as_ref(), &v0, &scfg)?;
        report.wall_core_ms = t0.elapsed().as_secs_f64() * 1e3;
        report.iterations_core = res.iterations_used;
        report.matvecs_core = res.matvecs;
        report.converged = res.converged;

        let rho_new = spectral_radius(&res.ritz_values) + (rho + e_norm) * cfg.eps * cfg.eps;
        let t1 = Instant::now();
        let high = Self::solve_high_order(&next, &res.basis, cfg, rho_new, split_seed(seed, 5))?;
        report.wall_high_ms = t1.elapsed().as_secs_f64() * 1e3;
        report.iterations_high = high.iterations;
        report.matvecs_high = high.matvecs;

        let (basis, ritz_values, residual_norms) = ordered(&res, cfg.target);
        let mut out = self.clone();
        out.operator = next.clone();
        out.refresh_operator = next;
        out.pending = None;
        out.pending_norm = 0.0;
        out.step_index = step;
        out.rho_at_refresh = rho_new.max(spectral_radius(&high.values));
        out.high_order = high.values;
        out.core = SubspaceEstimate { basis, ritz_values, residual_norms, certified_eps: 1.0 };
        out.core.certified_eps = out.certify(warm && cfg.stopping == Stopping::Bound);

        if cfg.adaptive_rank {
            out.adapt_rank(&mut report, seed)?;
        }
        report.r_after = out.rank();
        report.certified_eps = out.core.certified_eps;
        Ok((out, report))
    }

    fn set_stopping(&self, scfg: &mut SolverConfig, warm: bool, gap_estimate: f64, lam_r: f64, lam_r1: f64) {
        let cfg = &self.config;
        match cfg.stopping {
            Stopping::Residual => {
                scfg.tol = cfg.eps;
                scfg.residual_scale = None;
            }
            Stopping::Bound if warm => {
                scfg.fixed_iterations = true;
            }
            Stopping::Certified | Stopping::Bound => {
                let gap = if gap_estimate > 0.0 {
                    gap_estimate
                } else if lam_r > lam_r1 {
                    lam_r - lam_r1
                } else {
                    1e-2 * lam_r.abs().max(f64::MIN_POSITIVE)
                };
                scfg.tol = cfg.eps * gap / (scfg.target_r as f64).sqrt();
                scfg.residual_scale = Some(1.0);
            }
        }
    }

    /// A-posteriori accuracy of the current core estimate.
    fn certify(&self, bound_guaranteed: bool) -> f64 {
        let (lam_r, lam_r1) = self.gap_values();
        let delta = lam_r - lam_r1 - 2.0 * self.rho_at_refresh * self.config.eps * self.config.eps;
        let post = if delta > 0.0 { (frobenius(&self.core.residual_norms) / delta).min(1.0) } else { 1.0 };
        if bound_guaranteed {
            post.min(self.config.eps)
        } else {
            post
        }
    }

    fn adapt_rank(&mut self, report: &mut StepReport, seed: u64) -> Result<()> {
        let cfg = self.config.clone();
        let n = self.operator.nrows();
        let mut values: Vec<f64> = self.core.ritz_values.clone();
        values.extend_from_slice(&self.high_order);
        let r = self.rank();
        let upper = if cfg.max_rank == 0 { n - cfg.q } else { cfg.max_rank.min(n - cfg.q) };
        let upper = upper.min(values.len() - 1);
        let r_c = match candidate_size(&values) {
            Ok(c) => c.clamp(cfg.min_rank.min(upper), upper),
            Err(Error::DegenerateSpectrum(_)) | Err(Error::InvalidArgument(_)) => return Ok(()),
            Err(e) => return Err(e),
        };
        report.r_candidate = Some(r_c);
        let SizeDecision::Resize(new_r) = apply_size_hysteresis(&mut self.history, r, r_c) else {
            return Ok(());
        };
        if new_r < r {
            let keep: Vec<usize> = (0..new_r).collect();
            let dropped = self.core.ritz_values[new_r..].to_vec();
            self.core.basis = OrthonormalBasis::from_trusted(self.core.basis.matrix().select_columns(&keep));
            self.core.ritz_values.truncate(new_r);
            self.core.residual_norms.truncate(new_r);
            let mut high = dropped;
            high.extend_from_slice(&self.high_order);
            high.truncate(cfg.q);
            self.high_order = high;
        } else {
            let mut rng = rng_from_seed(split_seed(seed, 6));
            let extra = gaussian_matrix(&mut rng, n, new_r - r);
            let added = orthogonalize_against(&self.core.basis, &extra)?;
            let seed_basis = OrthonormalBasis::from_trusted(self.core.basis.matrix().hcat(added.matrix())?);
            let mut scfg = SolverConfig::new(cfg.method, new_r);
            scfg.target = cfg.target;
            scfg.k_max = cfg.hard_cap;
            scfg.seed = split_seed(seed, 7);
            let (lam_new, lam_next) = (values[new_r - 1].abs(), values[new_r].abs());
            let gap = lam_new - lam_next - 3.0 * self.rho_at_refresh * cfg.eps * cfg.eps;
            self.set_stopping(&mut scfg, false, gap, lam_new, lam_next);
            let res = solve(self.operator.as_ref(), &seed_basis, &scfg)?;
            report.iterations_resize = res.iterations_used;
            report.matvecs_core += res.matvecs;
            let high = Self::solve_high_order(&self.operator, &res.basis, &cfg, self.rho_at_refresh, split_seed(seed, 8))?;
            report.matvecs_high += high.matvecs;
            let (basis, ritz_values, residual_norms) = ordered(&res, cfg.target);
            self.high_order = high.values;
            self.core = SubspaceEstimate { basis, ritz_values, residual_norms, certified_eps: 1.0 };
        }
        self.core.certified_eps = self.certify(false);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{subspace_distance, DenseMatrix};
    use crate::operators::{DenseOp, RankOnePerturbationOp};

    #[test]
    fn proxy_examples() {
        let p = davis_kahan_proxy(0.0, 0.0, 2.0, 1.0, 1e-3, 2.0).unwrap();
        assert_eq!(p, ProxyBound { d_t: 0.0, applicable: true });
        let p = davis_kahan_proxy(0.6, 0.1, 2.0, 1.0, 1e-3, 2.0).unwrap();
        assert_eq!(p, ProxyBound { d_t: 1.0, applicable: false });
        let p = davis_kahan_proxy(0.0, 0.0, 1.0, 1.0, 1e-3, 2.0).unwrap();
        assert!(!p.applicable);
    }

    #[test]
    fn ratio_example() {
        let rho = convergence_ratio(2.0, 1.0, 0.1, 1e-3, 2.0).unwrap();
        assert!((rho - 1.899998 / 1.100004).abs() < 1e-12);
        assert!(matches!(convergence_ratio(1.0, -1.0, 0.0, 1e-3, 0.0), Err(Error::NonpositiveDenominator(_))));
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(candidate_size(&[5.0, 4.0, 3.9, 1.0, 0.9]).unwrap(), 3);
        assert_eq!(candidate_size(&[1.0, 1.0, 1.0, 1.0]).unwrap(), 2);
        assert!(candidate_size(&[1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(candidate_size(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn hysteresis_examples() {
        let mut h = SizeHistory::new(5);
        for _ in 0..4 {
            assert_eq!(apply_size_hysteresis(&mut h, 5, 6), SizeDecision::Keep);
        }
        assert_eq!(apply_size_hysteresis(&mut h, 5, 6), SizeDecision::Resize(6));
        assert_eq!(h.entries().count(), 0);
        apply_size_hysteresis(&mut h, 5, 6);
        assert_eq!(apply_size_hysteresis(&mut h, 5, 5), SizeDecision::Keep);
        assert_eq!(h.entries().count(), 0);
        for c in [6, 6, 7, 6, 6] {
            assert_eq!(apply_size_hysteresis(&mut h, 5, c), SizeDecision::Keep);
        }
    }

    fn planted(n: usize) -> SharedOp {
        let mut values = vec![10.0, 9.0, 8.0];
        values.extend((3..n).map(|i| 1.0 / i as f64));
        Arc::new(DenseOp::new(DenseMatrix::diagonal(&values)))
    }

    #[test]
    fn zero_perturbation_is_skipped() {
        let n = 30;
        let mut cfg = TrackerConfig::new(3, 1e-3);
        cfg.q = 3;
        let state = init_tracker(planted(n), cfg).unwrap();
        let zero: SharedOp = Arc::new(DenseOp::new(DenseMatrix::zeros(n, n)));
        let (next, report) = state.step(&TrackerUpdate::new(zero)).unwrap();
        assert!(report.skipped);
        assert_eq!(report.iterations_core, 0);
        assert_eq!(next.basis(), state.basis());
        assert_eq!(next.step_index(), 1);
    }

    #[test]
    fn refresh_tracks_a_rotation() {
        let n = 30;
        let mut cfg = TrackerConfig::new(3, 1e-6);
        cfg.q = 3;
        cfg.adaptive_rank = false;
        let a = planted(n);
        let state = init_tracker(a.clone(), cfg).unwrap();
        let mut z = vec![0.0; n];
        z[2] = 0.3;
        z[10] = 0.3;
        let e: SharedOp = Arc::new(RankOnePerturbationOp::new(1.0, z).unwrap());
        let (next, report) = state.step(&TrackerUpdate::new(e)).unwrap();
        assert!(!report.skipped);
        assert!(!report.fell_back);
        assert!(report.iterations_core <= report.kmax_bound.unwrap());
        let dense = next.operator().to_dense();
        let oracle = sym_eig_small(&dense).unwrap();
        let top = OrthonormalBasis::new(oracle.vectors.leading_columns(3), 1e-10).unwrap();
        assert!(subspace_distance(next.basis(), &top).unwrap() <= 1e-6);
    }

    #[test]
    fn failing_step_leaves_state_untouched() {
        let n = 30;
        let mut cfg = TrackerConfig::new(3, 1e-3);
        cfg.q = 3;
        let state = init_tracker(planted(n), cfg).unwrap();
        let wrong: SharedOp = Arc::new(DenseOp::new(DenseMatrix::zeros(n + 1, n + 1)));
        assert!(state.step(&TrackerUpdate::new(wrong)).is_err());
        assert_eq!(state.step_index(), 0);
    }

    #[test]
    fn config_rejects_oversized_rank() {
        let cfg = TrackerConfig::new(28, 1e-3);
        assert!(init_tracker(planted(30), cfg).is_err());
    }
}
