mod common;

use std::sync::Arc;

use common::*;
use eigentrack::graph::*;
use eigentrack::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;

/// A valid random batch: `adds` new edges and `dels` existing ones.
fn random_batch(g: &Graph, seed: u64, adds: usize, dels: usize) -> EditBatch {
    let mut r = rng(seed);
    let mut existing = g.edges();
    existing.shuffle(&mut r);
    let mut missing: Vec<(usize, usize)> = (0..g.n())
        .flat_map(|u| (u + 1..g.n()).map(move |v| (u, v)))
        .filter(|&(u, v)| !g.has_edge(u, v))
        .collect();
    missing.shuffle(&mut r);
    EditBatch {
        additions: missing.into_iter().take(adds).collect(),
        deletions: existing.into_iter().take(dels).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn batches_are_reversible(seed in any::<u64>(), adds in 0usize..6, dels in 0usize..6) {
        let (g, _) = sample_sbm(40, 2, 0.5, 0.1, seed).unwrap();
        let op = Arc::new(g.normalized_operator(1.0).unwrap());
        let batch = random_batch(&g, seed, adds, dels);
        let fwd = apply_batch_unchecked_alpha(&g, &op, &batch).unwrap();
        prop_assert_eq!(fwd.graph.num_edges(), g.num_edges() + batch.additions.len() - batch.deletions.len());
        let inverse = EditBatch { additions: batch.deletions.clone(), deletions: batch.additions.clone() };
        let back = apply_batch_unchecked_alpha(&fwd.graph, &fwd.operator, &inverse).unwrap();
        prop_assert_eq!(&back.graph, &g);
        prop_assert!((op_to_na(back.operator.as_ref()) - op_to_na(op.as_ref())).amax() <= 1e-14);
        // The perturbation is exactly the operator difference.
        let diff = op_to_na(fwd.operator.as_ref()) - op_to_na(op.as_ref());
        prop_assert!((op_to_na(fwd.perturbation.as_ref()) - diff).amax() <= 1e-14);
    }

    #[test]
    fn degrees_match_recount(seed in any::<u64>(), adds in 0usize..8, dels in 0usize..8) {
        let (g, _) = sample_sbm(30, 3, 0.4, 0.1, seed).unwrap();
        let op = Arc::new(g.normalized_operator(0.5).unwrap());
        let batch = random_batch(&g, seed ^ 1, adds, dels);
        let out = apply_batch_unchecked_alpha(&g, &op, &batch).unwrap();
        let next = &out.graph;
        let mut recount = vec![0usize; next.n()];
        for (u, v) in next.edges() {
            recount[u] += 1;
            recount[v] += 1;
        }
        for v in 0..next.n() {
            prop_assert_eq!(next.degree(v), recount[v]);
            prop_assert!((out.operator.degrees()[v] - (recount[v] as f64 + 0.5)).abs() < 1e-15);
        }
        let changes = batch.degree_changes();
        let alpha = changes.iter().filter(|(_, d)| **d != 0).map(|(v, d)| d.unsigned_abs() as f64 / (g.degree(*v) as f64 + 0.5)).fold(0.0, f64::max);
        prop_assert!((out.alpha - alpha).abs() < 1e-15);
    }

    #[test]
    fn sparse_update_bound_dominates_true_change(seed in any::<u64>(), size in 1usize..6, tau in 0.0f64..2.0) {
        let (g, _) = sample_sbm(80, 2, 0.5, 0.1, seed).unwrap();
        let op = Arc::new(g.normalized_operator(tau).unwrap());
        let batch = random_batch(&g, seed ^ 2, size, size);
        let alpha = relative_degree_change(&g, &batch, tau);
        prop_assume!(alpha < 1.0);
        let out = apply_batch(&g, &op, &batch).unwrap();
        let bound = sparse_update_bound(alpha, degree_condition(&op), batch.rank_upper_bound()).unwrap();
        let actual = spectral_norm(&op_to_na(out.perturbation.as_ref()));
        prop_assert!(actual <= bound, "actual {actual} bound {bound}");
    }

    #[test]
    fn sparse_update_bound_is_monotone(a1 in 0.0f64..0.99, a2 in 0.0f64..0.99, kappa in 1.0f64..50.0, rank in 1usize..40) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let b_lo = sparse_update_bound(lo, kappa, rank).unwrap();
        let b_hi = sparse_update_bound(hi, kappa, rank).unwrap();
        prop_assert!(b_lo <= b_hi);
        prop_assert!(sparse_update_bound(hi, kappa, rank).unwrap() <= sparse_update_bound(hi, kappa * 2.0, rank * 2).unwrap());
    }

    #[test]
    fn interpolation_batches_are_valid(seed in any::<u64>(), h in 0.0f64..1.0, size in 1usize..10) {
        let (src, _) = sample_sbm(50, 2, 0.3, 0.05, seed).unwrap();
        let (dst, _) = sample_sbm(50, 3, 0.3, 0.05, seed ^ 3).unwrap();
        let mut interp = NetworkInterpolation::new(dst.clone(), h, seed).unwrap();
        let mut g = src;
        let op = Arc::new(g.normalized_operator(1.0).unwrap());
        let mut op = op;
        for _ in 0..5 {
            let before = g.edit_distance(&dst).unwrap();
            let batch = interp.next_batch(&g, size).unwrap();
            prop_assert!(batch.validate(&g).is_ok());
            prop_assert!(batch.len() <= size);
            let out = apply_batch_unchecked_alpha(&g, &op, &batch).unwrap();
            let after = out.graph.edit_distance(&dst).unwrap();
            prop_assert!(after.abs_diff(before) <= batch.len());
            g = out.graph;
            op = out.operator;
        }
    }
}

#[test]
fn full_homophily_drives_edit_distance_down() {
    let (src, _) = sample_sbm(60, 2, 0.3, 0.05, 1).unwrap();
    let (dst, _) = sample_sbm(60, 3, 0.3, 0.05, 2).unwrap();
    let mut interp = NetworkInterpolation::new(dst.clone(), 1.0, 0).unwrap();
    let mut g = src;
    let mut prev = g.edit_distance(&dst).unwrap();
    while prev > 0 {
        let batch = interp.next_batch(&g, 7).unwrap();
        for &(u, v) in &batch.additions {
            assert!(dst.has_edge(u, v));
        }
        for &(u, v) in &batch.deletions {
            assert!(!dst.has_edge(u, v));
        }
        let op = Arc::new(g.normalized_operator(1.0).unwrap());
        g = apply_batch_unchecked_alpha(&g, &op, &batch).unwrap().graph;
        let d = g.edit_distance(&dst).unwrap();
        assert_eq!(d + batch.len(), prev);
        prev = d;
    }
    assert_eq!(g, dst);
}

#[test]
fn sbm_edge_count_matches_expectation() {
    let (n, k, p_in, p_out) = (600usize, 4usize, 0.2, 0.02);
    let block = (n / k) as f64;
    let within = k as f64 * block * (block - 1.0) / 2.0;
    let total = (n * (n - 1) / 2) as f64;
    let mean = within * p_in + (total - within) * p_out;
    let var = within * p_in * (1.0 - p_in) + (total - within) * p_out * (1.0 - p_out);
    for seed in 0..5 {
        let (g, labels) = sample_sbm(n, k, p_in, p_out, seed).unwrap();
        assert!((g.num_edges() as f64 - mean).abs() <= 5.0 * var.sqrt());
        assert_eq!(labels, sbm_labels(n, k));
    }
}

#[test]
fn invalid_batches_are_rejected() {
    let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let op = Arc::new(g.normalized_operator(0.0).unwrap());
    let add_existing = EditBatch { additions: vec![(0, 1)], deletions: vec![] };
    assert!(matches!(apply_batch(&g, &op, &add_existing), Err(Error::InvalidEdit(_))));
    let del_missing = EditBatch { additions: vec![], deletions: vec![(0, 3)] };
    assert!(matches!(apply_batch(&g, &op, &del_missing), Err(Error::InvalidEdit(_))));
    let twice = EditBatch { additions: vec![(0, 2)], deletions: vec![(2, 0)] };
    assert!(matches!(apply_batch(&g, &op, &twice), Err(Error::InvalidEdit(_))));
    // Vertex 0 has degree 1; adding two edges gives alpha = 2.
    let heavy = EditBatch { additions: vec![(0, 2), (0, 3)], deletions: vec![] };
    assert!(matches!(apply_batch(&g, &op, &heavy), Err(Error::DegreeViolation(a)) if a == 2.0));
    assert!(matches!(sparse_update_bound(1.0, 2.0, 4), Err(Error::DegreeViolation(_))));
}

#[test]
fn temporal_edges_parse_and_compact() {
    let text = "# comment\n10 20 3\n20 10 1\n\n30 30 2\n20 40 2.5\n50 60 0\n";
    let s = parse_temporal_edges(text.as_bytes()).unwrap();
    assert_eq!(s.original_ids, vec![10, 20, 40, 50, 60]);
    assert_eq!(s.edges, vec![(3, 4, 0.0), (0, 1, 1.0), (1, 2, 2.5)]);
    let lcc = largest_connected_component(&s);
    assert_eq!(lcc.original_ids, vec![10, 20, 40]);
    assert_eq!(lcc.edges, vec![(0, 1, 1.0), (1, 2, 2.5)]);
    assert!(matches!(parse_temporal_edges("1 2\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(parse_temporal_edges("# only\n".as_bytes()), Err(Error::EmptyStream)));
}
