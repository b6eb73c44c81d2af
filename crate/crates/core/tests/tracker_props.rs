mod common;

use std::sync::Arc;

use common::*;
use eigentrack::operators::DenseOp;
use eigentrack::tracker::{
    apply_size_hysteresis, candidate_size, convergence_ratio, davis_kahan_proxy, SizeDecision, SizeHistory, Stopping,
};
use eigentrack::{Method, SharedOp, TrackerConfig, TrackerState, TrackerUpdate};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn spectrum(n: usize, lead: &[f64], bulk_max: f64) -> Vec<f64> {
    let mut v = lead.to_vec();
    let rest = n - lead.len();
    v.extend((0..rest).map(|i| bulk_max * (1.0 - i as f64 / rest as f64)));
    v
}

fn shared(a: &DMatrix<f64>) -> SharedOp {
    Arc::new(DenseOp::symmetric(from_na(a)).unwrap())
}

/// Symmetric Gaussian matrix scaled to spectral norm `size`.
fn perturbation(rg: &mut rand_chacha::ChaCha20Rng, n: usize, size: f64) -> DMatrix<f64> {
    let g = gaussian(rg, n, n);
    let s = (&g + g.transpose()) * 0.5;
    let norm = spectral_norm(&s);
    s * (size / norm)
}

struct Case {
    a: DMatrix<f64>,
    state: TrackerState,
}

fn setup(seed: u64, method: Method, stopping: Stopping, eps: f64) -> Case {
    let n = 60;
    let r = 3;
    let mut rg = rng(seed);
    let (a, _) = planted(&mut rg, &spectrum(n, &[3.0, 2.7, 2.4], 1.5));
    let mut cfg = TrackerConfig::new(r, eps);
    cfg.q = 3;
    cfg.method = method;
    cfg.stopping = stopping;
    cfg.adaptive_rank = false;
    cfg.seed = seed;
    let state = TrackerState::new(shared(&a), cfg).unwrap();
    Case { a, state }
}

fn method_strategy() -> impl Strategy<Value = Method> {
    prop_oneof![Just(Method::SubspaceIteration), Just(Method::BlockKrylov)]
}

fn stopping_strategy() -> impl Strategy<Value = Stopping> {
    prop_oneof![Just(Stopping::Certified), Just(Stopping::Bound)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn proxy_majorizes_true_distance(seed in any::<u64>(), method in method_strategy(), size in 1e-4f64..0.2) {
        let Case { a, state } = setup(seed, method, Stopping::Certified, 1e-6);
        let mut rg = rng(seed ^ 77);
        let e = perturbation(&mut rg, a.nrows(), size);
        let (_, report) = state.step(&TrackerUpdate::new(shared(&e))).unwrap();
        let (truth, _) = leading_by_magnitude(&(&a + &e), 3);
        let actual = distance(&basis_na(state.basis()), &truth);
        // Power iteration gives a lower bound that can stall a little short
        // of the true norm when the top of the spectrum is clustered.
        let exact = spectral_norm(&e);
        prop_assert!(report.e_norm <= exact * (1.0 + 1e-12) && report.e_norm >= 0.9 * exact);
        if report.proxy_applicable {
            prop_assert!(actual <= report.d_t * (1.0 + 1e-6) + 1e-9, "actual {actual} d_t {}", report.d_t);
        }
    }

    #[test]
    fn steps_preserve_accuracy(seed in any::<u64>(), method in method_strategy(), stopping in stopping_strategy(), size in 1e-5f64..0.1) {
        let eps = 1e-3;
        let Case { mut a, mut state } = setup(seed, method, stopping, eps);
        let mut rg = rng(seed ^ 99);
        for _ in 0..4 {
            let e = perturbation(&mut rg, a.nrows(), size);
            a += &e;
            let next = shared(&a);
            let (s, report) = state.step(&TrackerUpdate::with_next(shared(&e), next)).unwrap();
            state = s;
            let (truth, _) = leading_by_magnitude(&a, 3);
            let actual = distance(&basis_na(state.basis()), &truth);
            if !report.fell_back {
                prop_assert!(actual <= eps, "actual {actual} report {report:?}");
            }
            if report.skipped {
                prop_assert!(report.d_t + report.certified_eps <= eps);
                prop_assert_eq!(report.iterations_core, 0);
            }
        }
    }

    #[test]
    fn higher_order_values_are_accurate(seed in any::<u64>(), method in method_strategy()) {
        let Case { a, state } = setup(seed, method, Stopping::Certified, 1e-4);
        let (vals, _) = sym_eig(&a);
        let mut mags: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
        mags.sort_by(|x, y| y.total_cmp(x));
        for (i, v) in state.high_order_values().iter().enumerate() {
            let want = mags[3 + i];
            prop_assert!((v.abs() - want).abs() <= 1e-3 * want, "{} vs {want}", v.abs());
        }
        for (i, v) in state.ritz_values().iter().enumerate() {
            prop_assert!((v.abs() - mags[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn rho_hat_dominates_spectral_radius(seed in any::<u64>(), size in 1e-4f64..0.3) {
        let Case { a, state } = setup(seed, Method::BlockKrylov, Stopping::Certified, 1e-4);
        prop_assert!(state.rho_hat() >= spectral_norm(&a) * (1.0 - 1e-12));
        let mut rg = rng(seed ^ 5);
        let e = perturbation(&mut rg, a.nrows(), size);
        let (next, _) = state.step(&TrackerUpdate::new(shared(&e))).unwrap();
        prop_assert!(next.rho_hat() >= spectral_norm(&(&a + &e)) * (1.0 - 1e-6));
    }

    #[test]
    fn proxy_formula(e in 0.0f64..1.0, ev in 0.0f64..1.0, lam_r in 0.5f64..5.0, gap in 0.0f64..3.0, eps in 1e-6f64..0.5, rho in 0.0f64..10.0) {
        let lam_r1 = lam_r - gap;
        let p = davis_kahan_proxy(e, ev, lam_r, lam_r1, eps, rho).unwrap();
        let denom = gap - 3.0 * eps * eps * rho;
        if denom > 0.0 && e < denom / 2.0 {
            prop_assert!(p.applicable);
            let want = (2.0 * (eps * e * e + ev * ev).sqrt() / denom).min(1.0);
            prop_assert!((p.d_t - want).abs() <= 1e-12 * (1.0 + want));
            // Monotone in the perturbation size.
            let bigger = davis_kahan_proxy(e * 0.5, ev * 0.5, lam_r, lam_r1, eps, rho).unwrap();
            prop_assert!(bigger.d_t <= p.d_t + 1e-15);
        } else {
            prop_assert!(!p.applicable);
            prop_assert_eq!(p.d_t, 1.0);
        }
    }

    #[test]
    fn hysteresis_needs_consecutive_agreement(window in 1usize..6, proposals in proptest::collection::vec(2usize..5, 1..30)) {
        let mut history = SizeHistory::new(window);
        let mut r = 3;
        let mut streak = 0usize;
        let mut last = 0usize;
        for &p in &proposals {
            if p == r {
                streak = 0;
            } else if p == last {
                streak += 1;
            } else {
                streak = 1;
            }
            last = if p == r { 0 } else { p };
            match apply_size_hysteresis(&mut history, r, p) {
                SizeDecision::Resize(new) => {
                    prop_assert_eq!(new, p);
                    prop_assert!(streak >= window);
                    r = new;
                    streak = 0;
                    last = 0;
                }
                SizeDecision::Keep => prop_assert!(p == r || streak < window),
            }
        }
    }
}

#[test]
fn step_is_transactional() {
    let Case { a, state } = setup(4, Method::SubspaceIteration, Stopping::Certified, 1e-3);
    let before = state.basis().clone();
    let wrong = shared(&DMatrix::identity(a.nrows() + 1, a.nrows() + 1));
    assert!(state.step(&TrackerUpdate::new(wrong)).is_err());
    assert_eq!(state.basis(), &before);
    assert_eq!(state.step_index(), 0);
    let e = perturbation(&mut rng(1), a.nrows(), 1e-2);
    let (s1, r1) = state.step(&TrackerUpdate::new(shared(&e))).unwrap();
    let (s2, r2) = state.step(&TrackerUpdate::new(shared(&e))).unwrap();
    assert_eq!(s1.basis(), s2.basis());
    assert_eq!(r1.iterations_core, r2.iterations_core);
    assert_eq!(s1.step_index(), 1);
    assert_eq!(state.basis(), &before);
}

#[test]
fn tiny_perturbations_are_skipped() {
    let Case { a, state } = setup(8, Method::BlockKrylov, Stopping::Certified, 1e-2);
    let e = perturbation(&mut rng(2), a.nrows(), 1e-7);
    let (_, report) = state.step(&TrackerUpdate::new(shared(&e))).unwrap();
    assert!(report.skipped);
    assert_eq!(report.matvecs_core, 0);
}

#[test]
fn adaptive_rank_moves_to_largest_gap() {
    let n = 60;
    let mut rg = rng(12);
    let (a, _) = planted(&mut rg, &spectrum(n, &[3.0, 2.9, 2.8, 2.7, 1.0], 0.9));
    let mut cfg = TrackerConfig::new(2, 1e-3);
    cfg.q = 4;
    cfg.hysteresis = 2;
    let mut state = TrackerState::new(shared(&a), cfg).unwrap();
    for i in 0..6 {
        let e = perturbation(&mut rng(100 + i), n, 1e-3);
        state = state.step(&TrackerUpdate::new(shared(&e))).unwrap().0;
    }
    assert_eq!(state.rank(), 4);
}

#[test]
fn candidate_size_examples() {
    assert_eq!(candidate_size(&[10.0, 9.0, 8.0, 1.0, 0.9]).unwrap(), 3);
    assert_eq!(candidate_size(&[5.0, 4.0, 1.0, 0.5]).unwrap(), 2);
    assert!(candidate_size(&[1.0, 0.5]).is_err());
    assert!(convergence_ratio(1.0, -0.5, 0.1, 0.0, 0.0).is_err());
    let rho = convergence_ratio(2.0, 1.0, 0.1, 1e-3, 3.0).unwrap();
    assert!((rho - (2.0 - 0.1 - 3e-6) / (1.0 + 0.1 + 6e-6)).abs() < 1e-15);
}
