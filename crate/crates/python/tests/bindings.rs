use pyo3::prelude::*;
use pyo3::types::PyDict;
use pyo3::wrap_pymodule;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyDict>)>(f: F) {
    Python::attach(|py| {
        let module = wrap_pymodule!(pyeigentrack::pyeigentrack)(py);
        let globals = PyDict::new(py);
        globals.set_item("et", module).unwrap();
        f(py, &globals);
    });
}

#[test]
fn scalar_functions() {
    with_module(|py, globals| {
        py.run(
            c"assert et.kmax_warm(0.1, 1.5, 1e-3) == 12
assert et.kmax_gaussian(0.1, 1e-3) == 97
assert et.candidate_size([5.0, 4.0, 3.9, 1.0, 0.9]) == 3
d, ok = et.davis_kahan_proxy(0.0, 0.0, 2.0, 1.0, 1e-3, 2.0)
assert ok and d == 0.0
assert abs(et.subspace_distance([[1.0], [0.0]], [[0.0], [1.0]]) - 1.0) < 1e-12
try:
    et.kmax_warm(0.1, 0.5, 1e-3)
    raise AssertionError('expected ValueError')
except ValueError:
    pass
",
            Some(globals),
            None,
        )
        .unwrap();
    });
}

#[test]
fn tracker_and_experiment() {
    with_module(|py, globals| {
        py.run(
            c"n = 12
a = [[0.0] * n for _ in range(n)]
for i in range(n):
    a[i][i] = 1.0 / (i + 1)
a[0][0], a[1][1] = 5.0, 4.0
t = et.Tracker(a, 2, eps=1e-3, q=2, adaptive_rank=False)
assert t.rank == 2 and t.step_index == 0
e = [[0.0] * n for _ in range(n)]
e[0][1] = e[1][0] = 1e-3
report = t.step(e)
assert t.step_index == 1
assert report['step'] == 1
before = t.basis()
try:
    t.step([[0.0]])
    raise AssertionError('expected ValueError')
except ValueError:
    pass
assert t.basis() == before and t.step_index == 1
res = et.solve(a, 2, tol=1e-10)
assert res['converged'] and abs(res['ritz_values'][0] - 5.0) < 1e-8
csv_a, summary = et.run_experiment('sbm-track', steps=2, n=80, seed=3)
csv_b, _ = et.run_experiment('sbm-track', steps=2, n=80, seed=3)
assert csv_a == csv_b and summary['steps'] == 2
assert csv_a.splitlines()[0].startswith('step,e_norm')
",
            Some(globals),
            None,
        )
        .unwrap();
    });
}
