//! Command line front end for the experiment runners.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use eigentrack::experiments::{run, write_outputs, Command, PcaModel, RunConfig};
use eigentrack::tracker::Stopping;
use eigentrack::{Error, Method};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CommandArg {
    SbmTrack,
    GraphTrack,
    PcaTrack,
    SsaRun,
    SolveOnce,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    #[value(alias = "subspace-iteration")]
    Subspace,
    BlockKrylov,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StoppingArg {
    Certified,
    Bound,
    Residual,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Gaussian,
    RankOne,
}

/// Incremental eigenspace tracking experiments.
///
/// Writes one CSV row per step to --output (stdout if omitted) and a run
/// summary to <output>.summary.json. Exit status: 0 on success, 1 on input
/// or I/O errors, 2 when a step breaks an iteration or accuracy bound.
#[derive(Debug, Parser)]
#[command(name = "eigentrack", version)]
struct Cli {
    #[arg(long, value_enum)]
    command: CommandArg,
    /// Edge file (`src dst timestamp`) or time-series CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Initial dimension of the tracked subspace.
    #[arg(long)]
    r: Option<usize>,
    /// Number of higher-order eigenvalues estimated per refresh.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Regularization of the normalized adjacency matrix.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Consecutive identical size proposals needed to resize.
    #[arg(long)]
    hysteresis: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long, value_enum)]
    stopping: Option<StoppingArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    steps: Option<usize>,
    /// Compare every step with a dense eigendecomposition.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    oracle_threshold: Option<usize>,
    /// Solve every step from a random start.
    #[arg(long)]
    cold_start: bool,
    #[arg(long)]
    warm_fraction: Option<f64>,
    /// Enable or disable adaptive subspace sizing.
    #[arg(long)]
    adaptive_rank: Option<bool>,
    /// Fill the wall-clock columns (makes output nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Iteration cap of any single solve.
    #[arg(long)]
    hard_cap: Option<usize>,
    /// Vertices of synthetic graphs, or rows in PCA runs.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    /// Probability that an interpolation edit moves toward the target graph.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    source_clusters: Option<usize>,
    #[arg(long)]
    target_clusters: Option<usize>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Rank of the planted covariance (rank-one PCA model).
    #[arg(long)]
    d: Option<usize>,
    /// SSA window length W.
    #[arg(long)]
    window: Option<usize>,
    /// SSA segment length N.
    #[arg(long)]
    length: Option<usize>,
    /// Samples per SSA update.
    #[arg(long)]
    step_size: Option<usize>,
    /// Noise level of the synthetic SSA series.
    #[arg(long)]
    noise: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Cli {
    fn into_config(self) -> RunConfig {
        let command = match self.command {
            CommandArg::SbmTrack => Command::SbmTrack,
            CommandArg::GraphTrack => Command::GraphTrack,
            CommandArg::PcaTrack => Command::PcaTrack,
            CommandArg::SsaRun => Command::SsaRun,
            CommandArg::SolveOnce => Command::SolveOnce,
        };
        let mut cfg = RunConfig::new(command);
        if let Some(m) = self.model {
            cfg = cfg.with_model(match m {
                ModelArg::Gaussian => PcaModel::Gaussian,
                ModelArg::RankOne => PcaModel::RankOne,
            });
        }
        cfg.input = self.input;
        cfg.output = self.output;
        cfg.seed = self.seed;
        cfg.oracle = self.oracle;
        cfg.cold_start = self.cold_start;
        cfg.timing = self.timing;
        if self.steps.is_some() {
            cfg.steps = self.steps;
        }
        set(&mut cfg.r, self.r);
        set(&mut cfg.q, self.q);
        set(&mut cfg.eps, self.eps);
        set(&mut cfg.tau, self.tau);
        set(&mut cfg.batch_size, self.batch_size);
        set(&mut cfg.hysteresis, self.hysteresis);
        set(
            &mut cfg.method,
            self.method.map(|m| match m {
                MethodArg::Subspace => Method::SubspaceIteration,
                MethodArg::BlockKrylov => Method::BlockKrylov,
            }),
        );
        set(
            &mut cfg.stopping,
            self.stopping.map(|s| match s {
                StoppingArg::Certified => Stopping::Certified,
                StoppingArg::Bound => Stopping::Bound,
                StoppingArg::Residual => Stopping::Residual,
            }),
        );
        set(&mut cfg.oracle_threshold, self.oracle_threshold);
        set(&mut cfg.warm_fraction, self.warm_fraction);
        set(&mut cfg.adaptive_rank, self.adaptive_rank);
        set(&mut cfg.hard_cap, self.hard_cap);
        set(&mut cfg.n, self.n);
        set(&mut cfg.p_in, self.p_in);
        set(&mut cfg.p_out, self.p_out);
        set(&mut cfg.h, self.h);
        set(&mut cfg.source_clusters, self.source_clusters);
        set(&mut cfg.target_clusters, self.target_clusters);
        set(&mut cfg.d, self.d);
        set(&mut cfg.window, self.window);
        set(&mut cfg.length, self.length);
        set(&mut cfg.step_size, self.step_size);
        set(&mut cfg.noise, self.noise);
        cfg
    }
}

fn main() -> ExitCode {
    let cfg = Cli::parse().into_config();
    let outcome = run(&cfg).and_then(|out| write_outputs(cfg.output.as_deref(), &out).map(|()| out));
    match outcome {
        Ok(out) if out.has_violations() => {
            eprintln!(
                "eigentrack: {} bound violation(s), {} oracle exceedance(s)",
                out.summary.bound_violations, out.summary.oracle_exceedances
            );
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eigentrack: {e}");
            if matches!(e, Error::DegreeViolation(_)) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
