//! End-to-end experiment runners used by the `eigentrack` binary.
//!
//! Every runner turns a [`RunConfig`] into a list of [`StepRow`]s plus a
//! [`RunSummary`]. All randomness derives from `RunConfig::seed`, and wall
//! clock columns stay empty unless `timing` is set, so two runs with the
//! same configuration produce byte-identical CSV output.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    apply_batch, apply_batch_unchecked_alpha, largest_connected_component, load_temporal_edges, sample_sbm,
    synthetic_temporal_stream, EditBatch, Graph, NetworkInterpolation, TemporalEdges,
};
use crate::linalg::{qr_thin, subspace_distance, sym_eig_small, DenseMatrix, OrthonormalBasis, SymmetricSpectrum};
use crate::operators::{
    DenseOp, DilationOp, GramOp, GramSide, HankelTrajectoryOp, LinearCombinationOp, LinearOperator, LowRankSymmetricOp,
    NormalizedAdjacencyOp, OperatorExt, RankOnePerturbationOp, SharedOp,
};
use crate::pca::{
    energy_ratio, lowrank_gaussian_bound, parse_time_series, reconstruct, right_factors, sample_perturbation,
    sample_rank_one, two_sinusoids, wedin_gaussian_bound, PerturbationModel,
};
use crate::rng::{gaussian_matrix, rng_from_seed, split_seed};
use crate::solvers::{kmax_warm, random_orthonormal_init, solve, Method, SolverConfig, Target};
use crate::tracker::{convergence_ratio, davis_kahan_proxy, init_tracker, StepReport, Stopping, TrackerConfig, TrackerUpdate};

/// Experiment selected on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SbmTrack,
    GraphTrack,
    PcaTrack,
    SsaRun,
    SolveOnce,
}

/// Update law of the PCA experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PcaModel {
    /// Dense Gaussian updates of a square matrix, tracked through its dilation.
    Gaussian,
    /// Signed rank-one updates of a low-rank covariance.
    RankOne,
}

/// Parameters of one experiment run. [`RunConfig::new`] fills in the
/// defaults of each command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub r: usize,
    pub q: usize,
    pub eps: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub hysteresis: usize,
    pub method: Method,
    pub stopping: Stopping,
    pub seed: u64,
    /// Number of steps; `None` runs until the stream is exhausted.
    pub steps: Option<usize>,
    pub oracle: bool,
    pub oracle_threshold: usize,
    pub cold_start: bool,
    /// Fraction of the edge stream that forms the initial graph.
    pub warm_fraction: f64,
    pub adaptive_rank: bool,
    pub timing: bool,
    pub hard_cap: usize,
    /// Number of vertices (graphs) or rows (PCA).
    pub n: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Probability that an interpolation edit moves toward the target graph.
    pub h: f64,
    pub source_clusters: usize,
    pub target_clusters: usize,
    pub model: PcaModel,
    /// Rank of the planted covariance in the rank-one PCA model.
    pub d: usize,
    pub window: usize,
    pub length: usize,
    pub step_size: usize,
    pub noise: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let mut cfg = Self {
            command,
            input: None,
            output: None,
            r: 5,
            q: 5,
            eps: 1e-3,
            tau: 0.0,
            batch_size: 5,
            hysteresis: 5,
            method: Method::SubspaceIteration,
            stopping: Stopping::Certified,
            seed: 0,
            steps: Some(200),
            oracle: false,
            oracle_threshold: 500,
            cold_start: false,
            warm_fraction: 0.5,
            adaptive_rank: false,
            timing: false,
            hard_cap: 500,
            n: 400,
            p_in: 0.5,
            p_out: 0.1,
            h: 0.9,
            source_clusters: 5,
            target_clusters: 6,
            model: PcaModel::RankOne,
            d: 500,
            window: 256,
            length: 1024,
            step_size: 6,
            noise: 0.01,
        };
        match command {
            Command::SbmTrack => cfg.stopping = Stopping::Bound,
            Command::GraphTrack => {
                cfg.tau = 1.0;
                cfg.steps = None;
                cfg.adaptive_rank = true;
                cfg.n = 2000;
                cfg.p_in = 0.1;
                cfg.p_out = 0.005;
            }
            Command::PcaTrack => {
                cfg.r = 4;
                cfg.steps = Some(50);
                cfg.method = Method::BlockKrylov;
                cfg.adaptive_rank = true;
                cfg.n = 2000;
            }
            Command::SsaRun => {
                cfg.r = 4;
                cfg.steps = Some(50);
                cfg.adaptive_rank = true;
            }
            Command::SolveOnce => {
                cfg.n = 200;
                cfg.steps = Some(1);
            }
        }
        cfg
    }

    /// Switches the PCA model and resets the size defaults that go with it.
    pub fn with_model(mut self, model: PcaModel) -> Self {
        self.model = model;
        self.n = match model {
            PcaModel::Gaussian => 300,
            PcaModel::RankOne => 2000,
        };
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.r == 0 || self.q == 0 || self.batch_size == 0 || self.hysteresis == 0 || self.hard_cap == 0 {
            return Err(Error::InvalidArgument("r, q, batch size, hysteresis and hard cap must be positive".into()));
        }
        if !(self.warm_fraction > 0.0 && self.warm_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("warm fraction must lie in (0, 1), got {}", self.warm_fraction)));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("tau must be >= 0, got {}", self.tau)));
        }
        Ok(())
    }

    fn check_oracle_size(&self, n: usize) -> Result<()> {
        if self.oracle && n > self.oracle_threshold {
            return Err(Error::InvalidArgument(format!(
                "the dense oracle is limited to n <= {} (got n = {n})",
                self.oracle_threshold
            )));
        }
        Ok(())
    }

    fn tracker_config(&self) -> TrackerConfig {
        let mut t = TrackerConfig::new(self.r, self.eps);
        t.q = self.q;
        t.method = self.method;
        t.stopping = self.stopping;
        t.hysteresis = self.hysteresis;
        t.adaptive_rank = self.adaptive_rank;
        t.hard_cap = self.hard_cap;
        t.cold_start = self.cold_start;
        t.seed = split_seed(self.seed, 100);
        t
    }
}

/// One CSV row. Columns that do not apply to a command are left empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepRow {
    pub step: usize,
    pub e_norm: Option<f64>,
    pub ev_norm: Option<f64>,
    pub d_t: Option<f64>,
    pub rho_t: Option<f64>,
    pub kmax_bound: Option<usize>,
    pub iterations_core: usize,
    pub iterations_high: usize,
    pub r: usize,
    pub skipped: bool,
    pub fell_back: bool,
    pub alpha: Option<f64>,
    /// Distance between the tracked estimate and the oracle eigenspace.
    pub dist_oracle: Option<f64>,
    pub wall_core_ms: Option<f64>,
    pub wall_high_ms: Option<f64>,
    pub matvecs_core: usize,
    pub matvecs_high: usize,
    pub r_candidate: Option<usize>,
    pub certified_eps: Option<f64>,
    /// Iteration bound recomputed from oracle eigenvalues.
    pub kmax_oracle: Option<usize>,
    /// A-priori bound on the distance between consecutive true subspaces.
    pub bound: Option<f64>,
    /// Oracle distance between consecutive true subspaces.
    pub step_dist_oracle: Option<f64>,
    pub edit_distance: Option<usize>,
    pub energy_ratio: Option<f64>,
    pub recon_sample: Option<f64>,
}

impl StepRow {
    fn from_report(rep: &StepReport, timing: bool) -> Self {
        Self {
            step: rep.step,
            e_norm: Some(rep.e_norm),
            ev_norm: Some(rep.ev_norm),
            d_t: Some(rep.d_t),
            rho_t: rep.rho_t,
            kmax_bound: rep.kmax_bound,
            iterations_core: rep.iterations_core,
            iterations_high: rep.iterations_high,
            r: rep.r_after,
            skipped: rep.skipped,
            fell_back: rep.fell_back,
            wall_core_ms: timing.then_some(rep.wall_core_ms),
            wall_high_ms: timing.then_some(rep.wall_high_ms),
            matvecs_core: rep.matvecs_core,
            matvecs_high: rep.matvecs_high,
            r_candidate: rep.r_candidate,
            certified_eps: Some(rep.certified_eps),
            ..Self::default()
        }
    }
}

/// Totals and medians of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub command: Command,
    pub steps: usize,
    pub skipped: usize,
    pub fell_back: usize,
    pub total_iterations_core: usize,
    pub total_iterations_high: usize,
    pub total_matvecs_core: usize,
    pub total_matvecs_high: usize,
    pub median_iterations_core: Option<f64>,
    pub median_kmax_bound: Option<f64>,
    pub max_alpha: Option<f64>,
    pub max_dist_oracle: Option<f64>,
    /// Rows with an oracle distance above `eps`.
    pub oracle_exceedances: usize,
    /// Warm refreshes that used more iterations than their bound.
    pub bound_violations: usize,
    pub stopped_early: bool,
    pub stop_reason: Option<String>,
    pub vertices: Option<usize>,
    pub filled_values: Option<usize>,
    pub config: RunConfig,
}

/// Rows, summary and side outputs of a run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub rows: Vec<StepRow>,
    pub summary: RunSummary,
    /// Original vertex id of each compact id, for runs on edge files.
    pub id_map: Option<Vec<u64>>,
}

impl RunOutput {
    /// True when any row breaks an invariant the run is supposed to certify.
    pub fn has_violations(&self) -> bool {
        self.summary.bound_violations > 0 || self.summary.oracle_exceedances > 0
    }
}

/// Median of a list; `None` when it is empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

struct Extras {
    stopped_early: bool,
    stop_reason: Option<String>,
    vertices: Option<usize>,
    filled_values: Option<usize>,
    id_map: Option<Vec<u64>>,
}

impl Extras {
    fn none() -> Self {
        Self { stopped_early: false, stop_reason: None, vertices: None, filled_values: None, id_map: None }
    }
}

fn summarize(cfg: &RunConfig, rows: Vec<StepRow>, extras: Extras) -> RunOutput {
    let iters: Vec<f64> = rows.iter().map(|r| r.iterations_core as f64).collect();
    let kmax: Vec<f64> = rows.iter().filter_map(|r| r.kmax_bound.map(|k| k as f64)).collect();
    let max_of = |xs: Vec<f64>| xs.into_iter().reduce(f64::max);
    let bound_violations = if cfg.cold_start {
        0
    } else {
        rows.iter()
            .filter(|r| !r.skipped && !r.fell_back && r.kmax_bound.is_some_and(|k| r.iterations_core > k))
            .count()
    };
    let summary = RunSummary {
        command: cfg.command,
        steps: rows.len(),
        skipped: rows.iter().filter(|r| r.skipped).count(),
        fell_back: rows.iter().filter(|r| r.fell_back).count(),
        total_iterations_core: rows.iter().map(|r| r.iterations_core).sum(),
        total_iterations_high: rows.iter().map(|r| r.iterations_high).sum(),
        total_matvecs_core: rows.iter().map(|r| r.matvecs_core).sum(),
        total_matvecs_high: rows.iter().map(|r| r.matvecs_high).sum(),
        median_iterations_core: median(&iters),
        median_kmax_bound: median(&kmax),
        max_alpha: max_of(rows.iter().filter_map(|r| r.alpha).collect()),
        max_dist_oracle: max_of(rows.iter().filter_map(|r| r.dist_oracle).collect()),
        oracle_exceedances: rows.iter().filter(|r| r.dist_oracle.is_some_and(|d| d > cfg.eps)).count(),
        bound_violations,
        stopped_early: extras.stopped_early,
        stop_reason: extras.stop_reason,
        vertices: extras.vertices,
        filled_values: extras.filled_values,
        config: cfg.clone(),
    };
    RunOutput { rows, summary, id_map: extras.id_map }
}

/// Runs the experiment selected by `cfg.command`.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    match cfg.command {
        Command::SbmTrack => run_sbm_track(cfg),
        Command::GraphTrack => run_graph_track(cfg),
        Command::PcaTrack => run_pca_track(cfg),
        Command::SsaRun => run_ssa(cfg),
        Command::SolveOnce => run_solve_once(cfg),
    }
}

/// Writes rows as CSV with a header, even when there are no rows.
pub fn write_csv<W: Write>(rows: &[StepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names in output order.
pub const CSV_HEADER: [&str; 25] = [
    "step",
    "e_norm",
    "ev_norm",
    "d_t",
    "rho_t",
    "kmax_bound",
    "iterations_core",
    "iterations_high",
    "r",
    "skipped",
    "fell_back",
    "alpha",
    "dist_oracle",
    "wall_core_ms",
    "wall_high_ms",
    "matvecs_core",
    "matvecs_high",
    "r_candidate",
    "certified_eps",
    "kmax_oracle",
    "bound",
    "step_dist_oracle",
    "edit_distance",
    "energy_ratio",
    "recon_sample",
];

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes the CSV to `output` (or `stdout` without one), the summary to
/// `<output>.summary.json` and the vertex id map to `<output>.ids.csv`.
pub fn write_outputs(output: Option<&Path>, run: &RunOutput) -> Result<()> {
    let Some(path) = output else {
        let stdout = std::io::stdout();
        return write_csv(&run.rows, stdout.lock());
    };
    write_csv(&run.rows, std::io::BufWriter::new(std::fs::File::create(path)?))?;
    let json = serde_json::to_string_pretty(&run.summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(sibling(path, ".summary.json"), json + "\n")?;
    if let Some(ids) = &run.id_map {
        let mut w = std::io::BufWriter::new(std::fs::File::create(sibling(path, ".ids.csv"))?);
        writeln!(w, "compact_id,original_id")?;
        for (i, id) in ids.iter().enumerate() {
            writeln!(w, "{i},{id}")?;
        }
        w.flush()?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Oracle helpers

/// Indices of a spectrum sorted by decreasing magnitude (stable).
fn by_magnitude(spec: &SymmetricSpectrum) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..spec.values.len()).collect();
    idx.sort_by(|&a, &b| spec.values[b].abs().total_cmp(&spec.values[a].abs()).then(a.cmp(&b)));
    idx
}

/// Leading `r`-dimensional eigenspace by magnitude and the sorted magnitudes.
fn leading_magnitude(spec: &SymmetricSpectrum, r: usize) -> Result<(OrthonormalBasis, Vec<f64>)> {
    let idx = by_magnitude(spec);
    let basis = OrthonormalBasis::new(spec.vectors.select_columns(&idx[..r]), 1e-8)?;
    Ok((basis, idx.iter().map(|&i| spec.values[i].abs()).collect()))
}

fn dense_spectrum(op: &dyn LinearOperator) -> Result<SymmetricSpectrum> {
    sym_eig_small(&op.to_dense().symmetrized())
}

/// Nonzero spectrum of `sum_j w_j f_j f_j^T`, from a QR of the factors.
pub fn low_rank_spectrum(op: &LowRankSymmetricOp) -> Result<SymmetricSpectrum> {
    let (q, rf) = qr_thin(op.factors())?;
    let k = op.weights().len();
    let weighted = DenseMatrix::from_fn(rf.nrows(), k, |i, j| rf[(i, j)] * op.weights()[j]);
    let small = weighted.matmul(&rf.transpose())?.symmetrized();
    let eig = sym_eig_small(&small)?;
    Ok(SymmetricSpectrum { vectors: q.matrix().matmul(&eig.vectors)?, values: eig.values })
}

/// Iteration bound evaluated with exact eigenvalues in place of estimates.
fn oracle_kmax(rep: &StepReport, magnitudes: &[f64], r: usize, cfg: &RunConfig) -> Option<usize> {
    let (lam_r, lam_r1, rho) = (magnitudes[r - 1], magnitudes[r], magnitudes[0]);
    let proxy = davis_kahan_proxy(rep.e_norm, rep.ev_norm, lam_r, lam_r1, cfg.eps, rho).ok()?;
    let ratio = convergence_ratio(lam_r, lam_r1, rep.e_norm, cfg.eps, rho).ok()?;
    if !proxy.applicable || proxy.d_t >= 1.0 || ratio <= 1.0 {
        return None;
    }
    kmax_warm(proxy.d_t, ratio, cfg.eps, cfg.method).ok().map(|k| k.max(1))
}

// ---------------------------------------------------------------------------
// Graph runners

/// Evolves an SBM with `source_clusters` blocks toward one with
/// `target_clusters` blocks and tracks the leading eigenspace of the
/// normalized adjacency matrix.
pub fn run_sbm_track(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.check_oracle_size(cfg.n)?;
    let (mut graph, _) = sample_sbm(cfg.n, cfg.source_clusters, cfg.p_in, cfg.p_out, split_seed(cfg.seed, 1))?;
    let (target, _) = sample_sbm(cfg.n, cfg.target_clusters, cfg.p_in, cfg.p_out, split_seed(cfg.seed, 2))?;
    let mut edit_distance = graph.edit_distance(&target)?;
    let mut interp = NetworkInterpolation::new(target.clone(), cfg.h, split_seed(cfg.seed, 3))?;
    let mut op = Arc::new(graph.normalized_operator(cfg.tau)?);
    let mut state = init_tracker(op.clone(), cfg.tracker_config())?;
    let mut oracle_refresh = if cfg.oracle { Some(dense_spectrum(op.as_ref())?) } else { None };
    let mut rows = Vec::new();
    let mut extras = Extras::none();
    let steps = cfg.steps.unwrap_or(usize::MAX);
    while rows.len() < steps {
        if edit_distance == 0 {
            extras.stopped_early = true;
            extras.stop_reason = Some("target graph reached".into());
            break;
        }
        let batch = match interp.next_batch(&graph, cfg.batch_size) {
            Ok(b) => b,
            Err(Error::Exhausted) => {
                extras.stopped_early = true;
                extras.stop_reason = Some("no admissible edit left".into());
                break;
            }
            Err(e) => return Err(e),
        };
        for &(u, v) in &batch.additions {
            edit_distance = if target.has_edge(u, v) { edit_distance - 1 } else { edit_distance + 1 };
        }
        for &(u, v) in &batch.deletions {
            edit_distance = if target.has_edge(u, v) { edit_distance + 1 } else { edit_distance - 1 };
        }
        let outcome = apply_batch(&graph, &op, &batch)?;
        let r = state.rank();
        let (next, rep) = state.step(&TrackerUpdate::with_next(outcome.perturbation.clone(), outcome.operator.clone()))?;
        let mut row = StepRow::from_report(&rep, cfg.timing);
        row.alpha = Some(outcome.alpha);
        row.edit_distance = Some(edit_distance);
        if let Some(before) = &oracle_refresh {
            let after = dense_spectrum(outcome.operator.as_ref())?;
            let (_, mags) = leading_magnitude(before, r)?;
            if rep.kmax_bound.is_some() && !rep.fell_back {
                row.kmax_oracle = oracle_kmax(&rep, &mags, r, cfg);
            }
            let (truth, _) = leading_magnitude(&after, next.rank())?;
            row.dist_oracle = Some(subspace_distance(next.basis(), &truth)?);
            if !rep.skipped {
                oracle_refresh = Some(after);
            }
        }
        rows.push(row);
        graph = outcome.graph;
        op = outcome.operator;
        state = next;
    }
    Ok(summarize(cfg, rows, extras))
}

/// Loads the edge stream of a graph run, or synthesizes a stand-in.
fn load_stream(cfg: &RunConfig) -> Result<TemporalEdges> {
    match &cfg.input {
        Some(path) => Ok(largest_connected_component(&load_temporal_edges(path)?)),
        None => synthetic_temporal_stream(cfg.n, cfg.source_clusters, cfg.p_in, cfg.p_out, split_seed(cfg.seed, 4)),
    }
}

/// Replays a temporal edge stream: the earliest `warm_fraction` of edges
/// form the initial graph and the rest arrive in batches of `batch_size`.
pub fn run_graph_track(cfg: &RunConfig) -> Result<RunOutput> {
    let stream = load_stream(cfg)?;
    let n = stream.n;
    cfg.check_oracle_size(n)?;
    let split = ((stream.edges.len() as f64) * cfg.warm_fraction).floor() as usize;
    let initial: Vec<(usize, usize)> = stream.edges[..split].iter().map(|&(u, v, _)| (u, v)).collect();
    let mut graph = Graph::from_edges(n, &initial)?;
    let mut op = Arc::new(graph.normalized_operator(cfg.tau)?);
    let mut state = init_tracker(op.clone(), cfg.tracker_config())?;
    let mut rows = Vec::new();
    let steps = cfg.steps.unwrap_or(usize::MAX);
    for chunk in stream.edges[split..].chunks(cfg.batch_size).take(steps) {
        let batch = EditBatch { additions: chunk.iter().map(|&(u, v, _)| (u, v)).collect(), deletions: Vec::new() };
        let outcome = apply_batch_unchecked_alpha(&graph, &op, &batch)?;
        let (next, rep) = state.step(&TrackerUpdate::with_next(outcome.perturbation.clone(), outcome.operator.clone()))?;
        let mut row = StepRow::from_report(&rep, cfg.timing);
        row.alpha = Some(outcome.alpha);
        if cfg.oracle {
            let (truth, _) = leading_magnitude(&dense_spectrum(outcome.operator.as_ref())?, next.rank())?;
            row.dist_oracle = Some(subspace_distance(next.basis(), &truth)?);
        }
        rows.push(row);
        graph = outcome.graph;
        op = outcome.operator;
        state = next;
    }
    let mut extras = Extras::none();
    extras.vertices = Some(n);
    if cfg.input.is_some() {
        extras.id_map = Some(stream.original_ids);
    }
    Ok(summarize(cfg, rows, extras))
}

// ---------------------------------------------------------------------------
// PCA

/// Random `n x n` orthogonal matrix.
fn random_orthogonal(n: usize, k: usize, seed: u64) -> Result<DenseMatrix> {
    let mut rng = rng_from_seed(seed);
    Ok(qr_thin(&gaussian_matrix(&mut rng, n, k))?.0.into_matrix())
}

/// Square matrix `U diag(s) V^T` with random orthogonal factors, four
/// leading singular values `3.0, 2.8, 2.6, 2.4` and a bulk decreasing
/// linearly from 1 to 0.
pub fn planted_square(n: usize, seed: u64) -> Result<DenseMatrix> {
    let u = random_orthogonal(n, n, split_seed(seed, 1))?;
    let v = random_orthogonal(n, n, split_seed(seed, 2))?;
    let spikes = 4.min(n);
    let s: Vec<f64> = (0..n)
        .map(|i| if i < spikes { 3.0 - 0.2 * i as f64 } else { (n - 1 - i) as f64 / (n - spikes - 1).max(1) as f64 })
        .collect();
    let us = DenseMatrix::from_fn(n, n, |i, j| u[(i, j)] * s[j]);
    us.matmul(&v.transpose())
}

/// Rank-`d` covariance `F diag(w) F^T` with orthonormal `F` (`n x d`), four
/// planted eigenvalues `7, 6, 5, 4` and a bulk decreasing linearly from 1 to 0.1.
pub fn planted_covariance(n: usize, d: usize, seed: u64) -> Result<LowRankSymmetricOp> {
    if d < 6 || d > n {
        return Err(Error::InvalidArgument(format!("need 6 <= d <= n, got d = {d}, n = {n}")));
    }
    let f = random_orthogonal(n, d, seed)?;
    let w = (0..d)
        .map(|i| if i < 4 { 7.0 - i as f64 } else { 1.0 - 0.9 * (i - 4) as f64 / (d - 5) as f64 })
        .collect();
    LowRankSymmetricOp::new(f, w)
}

/// Leading `r` right singular vectors and singular values of a dense matrix,
/// with the matching left vectors `A v / sigma`.
fn dense_svd_leading(a: &DenseMatrix, r: usize) -> Result<(DenseMatrix, DenseMatrix, Vec<f64>)> {
    let eig = sym_eig_small(&a.tr_matmul(a)?.symmetrized())?;
    let v = eig.vectors.leading_columns(r);
    let sig: Vec<f64> = eig.values[..r].iter().map(|x| x.max(0.0).sqrt()).collect();
    let av = a.matmul(&v)?;
    let u = DenseMatrix::from_fn(a.nrows(), r, |i, j| if sig[j] > 0.0 { av[(i, j)] / sig[j] } else { 0.0 });
    Ok((u, v, sig))
}

/// Stacked `[U; V] / sqrt(2)` basis of the dilation eigenspace.
fn dilation_basis(u: &DenseMatrix, v: &DenseMatrix) -> Result<OrthonormalBasis> {
    let (m, k) = (u.nrows(), u.ncols());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let stacked = DenseMatrix::from_fn(m + v.nrows(), k, |i, j| if i < m { u[(i, j)] * s } else { v[(i - m, j)] * s });
    OrthonormalBasis::new(stacked, 1e-8)
}

/// Singular subspace distance `max(sin U, sin V)` between the leading
/// `r`-dimensional singular subspaces of two dense matrices.
pub fn singular_subspace_distance(a: &DenseMatrix, b: &DenseMatrix, r: usize) -> Result<f64> {
    let (ua, va, _) = dense_svd_leading(a, r)?;
    let (ub, vb, _) = dense_svd_leading(b, r)?;
    let basis = |m: DenseMatrix| OrthonormalBasis::new(m, 1e-8);
    let du = subspace_distance(&basis(ua)?, &basis(ub)?)?;
    let dv = subspace_distance(&basis(va)?, &basis(vb)?)?;
    Ok(du.max(dv))
}

/// Tracks principal subspaces under random updates.
pub fn run_pca_track(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.model {
        PcaModel::Gaussian => run_pca_gaussian(cfg),
        PcaModel::RankOne => run_pca_rank_one(cfg),
    }
}

fn pca_tracker_config(cfg: &RunConfig, n: usize) -> TrackerConfig {
    let mut t = cfg.tracker_config();
    t.max_rank = ((n as f64).sqrt().floor() as usize).max(cfg.r);
    t
}

fn run_pca_gaussian(cfg: &RunConfig) -> Result<RunOutput> {
    let n = cfg.n;
    cfg.check_oracle_size(n)?;
    let mut a = planted_square(n, split_seed(cfg.seed, 1))?;
    let mut tcfg = pca_tracker_config(cfg, n);
    tcfg.method = Method::BlockKrylov;
    tcfg.high_order_method = Method::BlockKrylov;
    tcfg.target = Target::LargestAlgebraic;
    let dil = |m: &DenseMatrix| -> SharedOp { Arc::new(DilationOp::new(Arc::new(DenseOp::new(m.clone())))) };
    let mut state = init_tracker(dil(&a), tcfg)?;
    let mut rows = Vec::new();
    for t in 0..cfg.steps.unwrap_or(0) {
        let e = sample_perturbation(PerturbationModel::DenseGaussian, n, split_seed(cfg.seed, 1000 + t as u64))?;
        let e_dense = e.to_dense();
        let a_next = a.add(&e_dense)?;
        let r = state.rank();
        let (sig_r, sig_r1) = state.gap_values();
        let (next, rep) = state.step(&TrackerUpdate::with_next(dil(&e_dense), dil(&a_next)))?;
        let mut row = StepRow::from_report(&rep, cfg.timing);
        row.bound = wedin_gaussian_bound(sig_r, sig_r1, n, r, 1.0).ok();
        if cfg.oracle {
            row.step_dist_oracle = Some(singular_subspace_distance(&a, &a_next, r)?);
            let (u, v, _) = dense_svd_leading(&a_next, next.rank())?;
            row.dist_oracle = Some(subspace_distance(next.basis(), &dilation_basis(&u, &v)?)?);
        }
        rows.push(row);
        a = a_next;
        state = next;
    }
    Ok(summarize(cfg, rows, Extras::none()))
}

fn run_pca_rank_one(cfg: &RunConfig) -> Result<RunOutput> {
    let n = cfg.n;
    let mut a = Arc::new(planted_covariance(n, cfg.d, split_seed(cfg.seed, 1))?);
    let mut state = init_tracker(a.clone(), pca_tracker_config(cfg, n))?;
    let mut spectrum = if cfg.oracle { Some(low_rank_spectrum(&a)?) } else { None };
    let mut rows = Vec::new();
    for t in 0..cfg.steps.unwrap_or(0) {
        let (sign, z) = sample_rank_one(n, split_seed(cfg.seed, 1000 + t as u64));
        let a_next = Arc::new(a.with_term(sign, &z)?);
        let e: SharedOp = Arc::new(RankOnePerturbationOp::new(sign, z)?);
        let r = state.rank();
        let (lam_r, lam_r1) = state.gap_values();
        let (next, rep) = state.step(&TrackerUpdate::with_next(e, a_next.clone()))?;
        let mut row = StepRow::from_report(&rep, cfg.timing);
        row.bound = lowrank_gaussian_bound(lam_r - lam_r1, n, r, 0.1).ok();
        if let Some(before) = &spectrum {
            let after = low_rank_spectrum(&a_next)?;
            let (v_before, _) = leading_magnitude(before, r)?;
            let (v_after, _) = leading_magnitude(&after, r)?;
            row.step_dist_oracle = Some(subspace_distance(&v_before, &v_after)?);
            let (truth, _) = leading_magnitude(&after, next.rank())?;
            row.dist_oracle = Some(subspace_distance(next.basis(), &truth)?);
            spectrum = Some(after);
        }
        rows.push(row);
        a = a_next;
        state = next;
    }
    Ok(summarize(cfg, rows, Extras::none()))
}

// ---------------------------------------------------------------------------
// SSA

/// Periods, amplitudes of the synthetic two-sinusoid series.
const SSA_PERIODS: (f64, f64) = (37.0, 91.0);
const SSA_AMPLITUDES: (f64, f64) = (1.0, 0.6);

/// Series consumed by an SSA run: the input file, or two sinusoids plus
/// Gaussian noise long enough for the requested number of steps.
fn ssa_series(cfg: &RunConfig) -> Result<(Vec<f64>, Option<usize>)> {
    match &cfg.input {
        Some(path) => {
            let parsed = parse_time_series(std::io::BufReader::new(std::fs::File::open(path)?))?;
            Ok((parsed.values, Some(parsed.filled)))
        }
        None => {
            let len = cfg.length + cfg.steps.unwrap_or(0) * cfg.step_size;
            Ok((two_sinusoids(len, SSA_PERIODS, SSA_AMPLITUDES, cfg.noise, split_seed(cfg.seed, 1)), None))
        }
    }
}

fn gram_of(series: &Arc<Vec<f64>>, start: usize, cfg: &RunConfig) -> Result<(Arc<HankelTrajectoryOp>, SharedOp)> {
    let hankel = Arc::new(HankelTrajectoryOp::new(series.clone(), start, cfg.length, cfg.window)?);
    let gram: SharedOp = Arc::new(GramOp::new(hankel.clone(), GramSide::Left));
    Ok((hankel, gram))
}

/// Streams window shifts of a time series and tracks the leading left
/// singular subspace of its trajectory matrix.
pub fn run_ssa(cfg: &RunConfig) -> Result<RunOutput> {
    let (values, filled) = ssa_series(cfg)?;
    if cfg.length > values.len() {
        return Err(Error::WindowTooLarge { window: cfg.length, len: values.len() });
    }
    let series = Arc::new(values);
    let available = (series.len() - cfg.length) / cfg.step_size.max(1);
    let steps = cfg.steps.map_or(available, |s| s.min(available));
    let (_, gram) = gram_of(&series, 0, cfg)?;
    let mut state = init_tracker(gram.clone(), cfg.tracker_config())?;
    let mut current = gram;
    let mut rows = Vec::new();
    for t in 1..=steps {
        let (hankel, next_op) = gram_of(&series, t * cfg.step_size, cfg)?;
        let e: SharedOp = Arc::new(LinearCombinationOp::difference(next_op.clone(), current.clone())?);
        let (next, rep) = state.step(&TrackerUpdate::with_next(e, next_op.clone()))?;
        let mut row = StepRow::from_report(&rep, cfg.timing);
        let gram_values = next.ritz_values();
        row.energy_ratio = Some(energy_ratio(gram_values, hankel.frobenius_norm_sq()));
        let (sigmas, right) = right_factors(&hankel, next.basis().matrix(), gram_values)?;
        let recon = reconstruct(next.basis().matrix(), &sigmas, &right, cfg.length, cfg.window)?;
        row.recon_sample = recon.last().copied();
        rows.push(row);
        current = next_op;
        state = next;
    }
    let mut extras = Extras::none();
    extras.filled_values = filled;
    Ok(summarize(cfg, rows, extras))
}

// ---------------------------------------------------------------------------
// Single solve

/// Symmetric `Q diag(lambda) Q^T` with `r` leading eigenvalues
/// `gap * (1 + 0.05 (r - i))` above a bulk decreasing linearly from 1 to 0.01.
pub fn planted_symmetric(n: usize, r: usize, gap: f64, seed: u64) -> Result<DenseMatrix> {
    if r >= n {
        return Err(Error::DimensionMismatch(format!("r = {r} must be below n = {n}")));
    }
    let q = random_orthogonal(n, n, seed)?;
    let lam: Vec<f64> = (0..n)
        .map(|i| {
            if i < r {
                gap * (1.0 + 0.05 * (r - i) as f64)
            } else {
                1.0 - 0.99 * (i - r) as f64 / (n - r).max(2).saturating_sub(1) as f64
            }
        })
        .collect();
    let ql = DenseMatrix::from_fn(n, n, |i, j| q[(i, j)] * lam[j]);
    Ok(ql.matmul(&q.transpose())?.symmetrized())
}

/// One cold solve, on the normalized adjacency of an edge file or on a
/// planted symmetric matrix.
pub fn run_solve_once(cfg: &RunConfig) -> Result<RunOutput> {
    let (op, ids): (SharedOp, Option<Vec<u64>>) = match &cfg.input {
        Some(_) => {
            let stream = load_stream(cfg)?;
            let edges: Vec<(usize, usize)> = stream.edges.iter().map(|&(u, v, _)| (u, v)).collect();
            let g = Graph::from_edges(stream.n, &edges)?;
            let op: Arc<NormalizedAdjacencyOp> = Arc::new(g.normalized_operator(cfg.tau)?);
            (op, Some(stream.original_ids))
        }
        None => (Arc::new(DenseOp::new(planted_symmetric(cfg.n, cfg.r, 1.5, split_seed(cfg.seed, 1))?)), None),
    };
    let n = op.nrows();
    cfg.check_oracle_size(n)?;
    if cfg.r >= n {
        return Err(Error::DimensionMismatch(format!("r = {} must be below n = {n}", cfg.r)));
    }
    let v0 = random_orthonormal_init(n, cfg.r, split_seed(cfg.seed, 2))?;
    let mut scfg = SolverConfig::new(cfg.method, cfg.r);
    scfg.k_max = cfg.hard_cap;
    scfg.tol = cfg.eps;
    scfg.seed = split_seed(cfg.seed, 3);
    let t0 = std::time::Instant::now();
    let res = solve(op.as_ref(), &v0, &scfg)?;
    let wall = t0.elapsed().as_secs_f64() * 1e3;
    let mut row = StepRow {
        step: 1,
        iterations_core: res.iterations_used,
        matvecs_core: res.matvecs,
        r: cfg.r,
        wall_core_ms: cfg.timing.then_some(wall),
        ..StepRow::default()
    };
    if cfg.oracle {
        let (truth, _) = leading_magnitude(&dense_spectrum(op.as_ref())?, cfg.r)?;
        row.dist_oracle = Some(subspace_distance(&res.basis, &truth)?);
    }
    let mut extras = Extras::none();
    extras.vertices = cfg.input.as_ref().map(|_| n);
    extras.id_map = ids;
    if !res.converged {
        extras.stop_reason = Some("iteration cap reached before convergence".into());
    }
    Ok(summarize(cfg, vec![row], extras))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    #[test]
    fn empty_csv_still_has_a_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.trim_end(), CSV_HEADER.join(","));
    }

    #[test]
    fn row_serializes_missing_values_as_empty_fields() {
        let row = StepRow { step: 3, r: 2, ..StepRow::default() };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), CSV_HEADER.len());
        assert!(line.starts_with("3,,,,,,0,0,2,false,false,"));
    }

    #[test]
    fn low_rank_spectrum_matches_dense() {
        let op = planted_covariance(40, 10, 7).unwrap().with_term(-1.0, &[0.1; 40]).unwrap();
        let fast = low_rank_spectrum(&op).unwrap();
        let dense = sym_eig_small(&op.to_dense()).unwrap();
        // The dense spectrum also holds n - d - 1 zeros, which sort above the negative eigenvalue.
        let nonzero = |v: &[f64]| v.iter().copied().filter(|x| x.abs() > 1e-9).collect::<Vec<_>>();
        let (fast, dense) = (nonzero(&fast.values), nonzero(&dense.values));
        assert_eq!(fast.len(), dense.len());
        for (a, b) in fast.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn planted_square_has_the_stated_singular_values() {
        let a = planted_square(20, 3).unwrap();
        let (_, _, s) = dense_svd_leading(&a, 5).unwrap();
        for (got, want) in s.iter().zip([3.0, 2.8, 2.6, 2.4, 1.0]) {
            assert!((got - want).abs() < 1e-10);
        }
    }
}
