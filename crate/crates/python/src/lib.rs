//! Python bindings: dense-matrix entry points to the solvers, bounds and the
//! tracker, plus the experiment runners.
//!
//! Matrices cross the boundary as lists of rows.

use std::sync::Arc;

use eigentrack::experiments::{self, Command, PcaModel, RunConfig};
use eigentrack::linalg::{subspace_distance as distance, DenseMatrix, OrthonormalBasis};
use eigentrack::operators::{DenseOp, SharedOp};
use eigentrack::solvers::{self, kmax_gaussian as kg, kmax_warm as kw, random_orthonormal_init, SolverConfig};
use eigentrack::tracker::{self, Stopping, TrackerConfig, TrackerState, TrackerUpdate};
use eigentrack::{graph, pca, Error, Method};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(msg) => PyIOError::new_err(msg),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(err)
}

fn basis(rows: Vec<Vec<f64>>) -> PyResult<OrthonormalBasis> {
    OrthonormalBasis::new(matrix(rows)?, 1e-8).map_err(err)
}

fn method(name: &str) -> PyResult<Method> {
    match name {
        "subspace" | "subspace-iteration" => Ok(Method::SubspaceIteration),
        "block-krylov" => Ok(Method::BlockKrylov),
        other => Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    }
}

fn stopping(name: &str) -> PyResult<Stopping> {
    match name {
        "certified" => Ok(Stopping::Certified),
        "bound" => Ok(Stopping::Bound),
        "residual" => Ok(Stopping::Residual),
        other => Err(PyValueError::new_err(format!("unknown stopping rule `{other}`"))),
    }
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any().unbind(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any().unbind(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any().unbind()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_any().unbind()
        }
    })
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

/// Sine of the largest principal angle between the column spans of `v` and `w`.
#[pyfunction]
fn subspace_distance(v: Vec<Vec<f64>>, w: Vec<Vec<f64>>) -> PyResult<f64> {
    distance(&basis(v)?, &basis(w)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (d, rho, eps, method = "subspace"))]
fn kmax_warm(d: f64, rho: f64, eps: f64, method: &str) -> PyResult<usize> {
    kw(d, rho, eps, self::method(method)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (gamma, eps, constant = 10.0, method = "subspace"))]
fn kmax_gaussian(gamma: f64, eps: f64, constant: f64, method: &str) -> PyResult<usize> {
    kg(gamma, eps, constant, self::method(method)?).map_err(err)
}

/// Returns `(d_t, applicable)`.
#[pyfunction]
fn davis_kahan_proxy(e_norm: f64, ev_norm: f64, lam_r: f64, lam_r1: f64, eps: f64, rho_hat: f64) -> PyResult<(f64, bool)> {
    let p = tracker::davis_kahan_proxy(e_norm, ev_norm, lam_r, lam_r1, eps, rho_hat).map_err(err)?;
    Ok((p.d_t, p.applicable))
}

#[pyfunction]
fn candidate_size(values: Vec<f64>) -> PyResult<usize> {
    tracker::candidate_size(&values).map_err(err)
}

#[pyfunction]
fn sparse_update_bound(alpha: f64, kappa: f64, rank_e: usize) -> PyResult<f64> {
    graph::sparse_update_bound(alpha, kappa, rank_e).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (sigma_r, sigma_r1, n, r, c_a = 1.0))]
fn wedin_gaussian_bound(sigma_r: f64, sigma_r1: f64, n: usize, r: usize, c_a: f64) -> PyResult<f64> {
    pca::wedin_gaussian_bound(sigma_r, sigma_r1, n, r, c_a).map_err(err)
}

#[pyfunction]
fn lowrank_gaussian_bound(delta_r: f64, n: usize, r: usize, epsilon: f64) -> PyResult<f64> {
    pca::lowrank_gaussian_bound(delta_r, n, r, epsilon).map_err(err)
}

/// Leading eigenpairs of a symmetric matrix. Starts from `v0` (rows) when
/// given, otherwise from a random basis. Returns a dict with `basis`,
/// `ritz_values`, `iterations`, `matvecs` and `converged`.
#[pyfunction]
#[pyo3(signature = (a, r, method = "subspace", tol = 1e-8, k_max = 500, seed = 0, v0 = None))]
fn solve<'py>(
    py: Python<'py>,
    a: Vec<Vec<f64>>,
    r: usize,
    method: &str,
    tol: f64,
    k_max: usize,
    seed: u64,
    v0: Option<Vec<Vec<f64>>>,
) -> PyResult<Bound<'py, PyDict>> {
    let op = DenseOp::symmetric(matrix(a)?).map_err(err)?;
    let start = match v0 {
        Some(rows) => basis(rows)?,
        None => random_orthonormal_init(op.matrix().nrows(), r, seed).map_err(err)?,
    };
    let mut cfg = SolverConfig::new(self::method(method)?, r);
    cfg.tol = tol;
    cfg.k_max = k_max;
    cfg.seed = seed;
    let res = py.detach(|| solvers::solve(&op, &start, &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("basis", res.basis.matrix().to_rows())?;
    out.set_item("ritz_values", res.ritz_values)?;
    out.set_item("residual_norms", res.residual_norms)?;
    out.set_item("iterations", res.iterations_used)?;
    out.set_item("matvecs", res.matvecs)?;
    out.set_item("converged", res.converged)?;
    Ok(out)
}

/// Incremental tracker over dense symmetric matrices.
#[pyclass(module = "pyeigentrack")]
struct Tracker {
    state: TrackerState,
}

#[pymethods]
impl Tracker {
    #[new]
    #[pyo3(signature = (a, r, eps, q = 5, method = "subspace", stopping = "certified", adaptive_rank = true, cold_start = false, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        a: Vec<Vec<f64>>,
        r: usize,
        eps: f64,
        q: usize,
        method: &str,
        stopping: &str,
        adaptive_rank: bool,
        cold_start: bool,
        seed: u64,
    ) -> PyResult<Self> {
        let op: SharedOp = Arc::new(DenseOp::symmetric(matrix(a)?).map_err(err)?);
        let mut cfg = TrackerConfig::new(r, eps);
        cfg.q = q;
        cfg.method = self::method(method)?;
        cfg.stopping = self::stopping(stopping)?;
        cfg.adaptive_rank = adaptive_rank;
        cfg.cold_start = cold_start;
        cfg.seed = seed;
        let state = py.detach(|| tracker::init_tracker(op, cfg)).map_err(err)?;
        Ok(Self { state })
    }

    /// Applies the symmetric perturbation `e` and returns the step report.
    /// On error the tracker keeps its previous state.
    fn step(&mut self, py: Python<'_>, e: Vec<Vec<f64>>) -> PyResult<Py<PyAny>> {
        let e: SharedOp = Arc::new(DenseOp::symmetric(matrix(e)?).map_err(err)?);
        let (next, report) = py.detach(|| self.state.step(&TrackerUpdate::new(e))).map_err(err)?;
        self.state = next;
        to_py(py, &report)
    }

    /// Current basis as a list of rows.
    fn basis(&self) -> Vec<Vec<f64>> {
        self.state.basis().matrix().to_rows()
    }

    fn ritz_values(&self) -> Vec<f64> {
        self.state.ritz_values().to_vec()
    }

    fn high_order_values(&self) -> Vec<f64> {
        self.state.high_order_values().to_vec()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.state.rank()
    }

    #[getter]
    fn certified_eps(&self) -> f64 {
        self.state.estimate().certified_eps
    }

    #[getter]
    fn step_index(&self) -> usize {
        self.state.step_index()
    }
}

/// Runs one experiment and returns `(csv_text, summary)`.
///
/// `command` is one of `sbm-track`, `graph-track`, `pca-track`,
/// `ssa-run`, `solve-once`. Keyword arguments override defaults: `steps`,
/// `seed`, `eps`, `r`, `n`, `batch_size`, `oracle`, `cold_start`,
/// `input`, `model` (`gaussian` or `rank-one`) and `method`.
#[pyfunction]
#[pyo3(signature = (command, *, steps = None, seed = 0, eps = None, r = None, n = None, batch_size = None, oracle = false, cold_start = false, input = None, model = None, method = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    command: &str,
    steps: Option<usize>,
    seed: u64,
    eps: Option<f64>,
    r: Option<usize>,
    n: Option<usize>,
    batch_size: Option<usize>,
    oracle: bool,
    cold_start: bool,
    input: Option<std::path::PathBuf>,
    model: Option<&str>,
    method: Option<&str>,
) -> PyResult<(String, Py<PyAny>)> {
    let command = match command {
        "sbm-track" => Command::SbmTrack,
        "graph-track" => Command::GraphTrack,
        "pca-track" => Command::PcaTrack,
        "ssa-run" => Command::SsaRun,
        "solve-once" => Command::SolveOnce,
        other => return Err(PyValueError::new_err(format!("unknown command `{other}`"))),
    };
    let mut cfg = RunConfig::new(command);
    match model {
        Some("gaussian") => cfg = cfg.with_model(PcaModel::Gaussian),
        Some("rank-one") => cfg = cfg.with_model(PcaModel::RankOne),
        Some(other) => return Err(PyValueError::new_err(format!("unknown model `{other}`"))),
        None => {}
    }
    if steps.is_some() {
        cfg.steps = steps;
    }
    cfg.seed = seed;
    cfg.oracle = oracle;
    cfg.cold_start = cold_start;
    cfg.input = input;
    if let Some(m) = method {
        cfg.method = self::method(m)?;
    }
    cfg.eps = eps.unwrap_or(cfg.eps);
    cfg.r = r.unwrap_or(cfg.r);
    cfg.n = n.unwrap_or(cfg.n);
    cfg.batch_size = batch_size.unwrap_or(cfg.batch_size);
    let out = py.detach(|| experiments::run(&cfg)).map_err(err)?;
    let mut buf = Vec::new();
    experiments::write_csv(&out.rows, &mut buf).map_err(err)?;
    let text = String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((text, to_py(py, &out.summary)?))
}

#[pymodule]
pub fn pyeigentrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tracker>()?;
    m.add_function(wrap_pyfunction!(subspace_distance, m)?)?;
    m.add_function(wrap_pyfunction!(kmax_warm, m)?)?;
    m.add_function(wrap_pyfunction!(kmax_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(davis_kahan_proxy, m)?)?;
    m.add_function(wrap_pyfunction!(candidate_size, m)?)?;
    m.add_function(wrap_pyfunction!(sparse_update_bound, m)?)?;
    m.add_function(wrap_pyfunction!(wedin_gaussian_bound, m)?)?;
    m.add_function(wrap_pyfunction!(lowrank_gaussian_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
