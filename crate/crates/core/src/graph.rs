//! Undirected graphs, stochastic block models, edit batches and temporal
//! edge streams.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::operators::{LinearCombinationOp, NormalizedAdjacencyOp, SharedOp, SparseSymmetric};
use crate::rng::{rng_from_seed, Rng};

/// Unordered vertex pair stored as `(min, max)`.
pub type Pair = (usize, usize);

fn ordered_pair(u: usize, v: usize) -> Pair {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Simple undirected graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    num_edges: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n], num_edges: 0 }
    }

    /// Builds a graph, rejecting self-loops, out-of-range ids and duplicate pairs.
    pub fn from_edges(n: usize, edges: &[Pair]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.check_pair(u, v)?;
            if g.has_edge(u, v) {
                return Err(Error::InvalidEdit(format!("duplicate edge ({u}, {v})")));
            }
            g.insert(u, v);
        }
        Ok(g)
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::InvalidEdit(format!("pair ({u}, {v}) out of range for n = {n}")));
        }
        if u == v {
            return Err(Error::InvalidEdit(format!("self-loop at vertex {u}")));
        }
        Ok(())
    }

    fn insert(&mut self, u: usize, v: usize) {
        for (a, b) in [(u, v), (v, u)] {
            let row = &mut self.adj[a];
            let pos = row.binary_search(&b).unwrap_err();
            row.insert(pos, b);
        }
        self.num_edges += 1;
    }

    fn remove(&mut self, u: usize, v: usize) {
        for (a, b) in [(u, v), (v, u)] {
            let row = &mut self.adj[a];
            let pos = row.binary_search(&b).expect("edge present");
            row.remove(pos);
        }
        self.num_edges -= 1;
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<Pair> {
        let mut out = Vec::with_capacity(self.num_edges);
        for (u, row) in self.adj.iter().enumerate() {
            out.extend(row.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn to_sparse(&self) -> SparseSymmetric {
        SparseSymmetric::from_edges(self.n(), &self.edges()).expect("graph invariants hold")
    }

    /// Regularized normalized adjacency operator of this graph.
    pub fn normalized_operator(&self, tau: f64) -> Result<NormalizedAdjacencyOp> {
        NormalizedAdjacencyOp::new(Arc::new(self.to_sparse()), tau)
    }

    /// Pairs that are edges in exactly one of the two graphs, sorted.
    pub fn symmetric_difference(&self, other: &Graph) -> Result<Vec<Pair>> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!("graphs on {} and {} vertices", self.n(), other.n())));
        }
        let mut out = Vec::new();
        for u in 0..self.n() {
            let (a, b) = (&self.adj[u], &other.adj[u]);
            let (mut i, mut j) = (0, 0);
            while i < a.len() || j < b.len() {
                let x = a.get(i).copied().unwrap_or(usize::MAX);
                let y = b.get(j).copied().unwrap_or(usize::MAX);
                let (w, only_one) = match x.cmp(&y) {
                    std::cmp::Ordering::Less => {
                        i += 1;
                        (x, true)
                    }
                    std::cmp::Ordering::Greater => {
                        j += 1;
                        (y, true)
                    }
                    std::cmp::Ordering::Equal => {
                        i += 1;
                        j += 1;
                        (x, false)
                    }
                };
                if only_one && w > u {
                    out.push((u, w));
                }
            }
        }
        Ok(out)
    }

    /// Number of edits separating the two graphs.
    pub fn edit_distance(&self, other: &Graph) -> Result<usize> {
        Ok(self.symmetric_difference(other)?.len())
    }
}

/// A batch of edge insertions and deletions applied together.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EditBatch {
    pub additions: Vec<Pair>,
    pub deletions: Vec<Pair>,
}

impl EditBatch {
    pub fn len(&self) -> usize {
        self.additions.len() + self.deletions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Upper bound on `rank(E)`: two per edited edge.
    pub fn rank_upper_bound(&self) -> usize {
        2 * self.len()
    }

    /// Checks the batch against `graph` without applying it.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.len());
        for &(u, v) in self.additions.iter().chain(&self.deletions) {
            graph.check_pair(u, v)?;
            if !seen.insert(ordered_pair(u, v)) {
                return Err(Error::InvalidEdit(format!("pair ({u}, {v}) edited twice in one batch")));
            }
        }
        if let Some(&(u, v)) = self.additions.iter().find(|&&(u, v)| graph.has_edge(u, v)) {
            return Err(Error::InvalidEdit(format!("cannot add existing edge ({u}, {v})")));
        }
        if let Some(&(u, v)) = self.deletions.iter().find(|&&(u, v)| !graph.has_edge(u, v)) {
            return Err(Error::InvalidEdit(format!("cannot delete missing edge ({u}, {v})")));
        }
        Ok(())
    }

    /// Net degree change of each touched vertex.
    pub fn degree_changes(&self) -> BTreeMap<usize, i64> {
        let mut delta = BTreeMap::new();
        for &(u, v) in &self.additions {
            *delta.entry(u).or_insert(0) += 1;
            *delta.entry(v).or_insert(0) += 1;
        }
        for &(u, v) in &self.deletions {
            *delta.entry(u).or_insert(0) -= 1;
            *delta.entry(v).or_insert(0) -= 1;
        }
        delta
    }
}

/// `alpha = max_i |delta d_i| / (d_i + tau)` over the pre-update degrees.
pub fn relative_degree_change(graph: &Graph, batch: &EditBatch, tau: f64) -> f64 {
    batch
        .degree_changes()
        .into_iter()
        .filter(|&(_, d)| d != 0)
        .map(|(v, d)| {
            let base = graph.degree(v) as f64 + tau;
            if base > 0.0 {
                d.unsigned_abs() as f64 / base
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Degree condition number `max_i d_i / min_j d_j` of the regularized degrees.
pub fn degree_condition(op: &NormalizedAdjacencyOp) -> f64 {
    let d = op.degrees();
    let max = d.iter().copied().fold(0.0, f64::max);
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Upper bound on `||A_new - A_old||_2` for normalized adjacency operators
/// after a sparse edit batch:
///
/// `alpha (1 + alpha + sqrt(min(kappa, rank_e))) + (alpha (1 + alpha) / 2)^2`.
pub fn sparse_update_bound(alpha: f64, kappa: f64, rank_e: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::DegreeViolation(alpha));
    }
    if !(kappa >= 1.0) {
        return Err(Error::InvalidArgument(format!("degree condition number must be >= 1, got {kappa}")));
    }
    let m = kappa.min(rank_e as f64);
    let half = alpha * (1.0 + alpha) / 2.0;
    Ok(alpha * (1.0 + alpha + m.sqrt()) + half * half)
}

/// Result of applying an edit batch.
#[derive(Clone)]
pub struct BatchOutcome {
    pub graph: Graph,
    pub operator: Arc<NormalizedAdjacencyOp>,
    /// `A_new - A_old` as a lazy difference of normalized operators.
    pub perturbation: SharedOp,
    pub alpha: f64,
}

/// Applies a batch, requiring `alpha < 1`.
pub fn apply_batch(graph: &Graph, operator: &Arc<NormalizedAdjacencyOp>, batch: &EditBatch) -> Result<BatchOutcome> {
    batch.validate(graph)?;
    let alpha = relative_degree_change(graph, batch, operator.tau());
    if alpha >= 1.0 {
        return Err(Error::DegreeViolation(alpha));
    }
    apply_batch_unchecked_alpha(graph, operator, batch)
}

/// Applies a batch without the `alpha < 1` requirement; `alpha` is still
/// reported. Used for streams where new vertices appear with degree zero.
pub fn apply_batch_unchecked_alpha(graph: &Graph, operator: &Arc<NormalizedAdjacencyOp>, batch: &EditBatch) -> Result<BatchOutcome> {
    if operator.adjacency().n() != graph.n() {
        return Err(Error::DimensionMismatch("operator and graph sizes differ".into()));
    }
    batch.validate(graph)?;
    let tau = operator.tau();
    let alpha = relative_degree_change(graph, batch, tau);
    let mut next = graph.clone();
    for &(u, v) in &batch.deletions {
        next.remove(u, v);
    }
    for &(u, v) in &batch.additions {
        next.insert(u, v);
    }
    let new_op = Arc::new(next.normalized_operator(tau)?);
    let before: SharedOp = operator.clone();
    let after: SharedOp = new_op.clone();
    let perturbation = Arc::new(LinearCombinationOp::difference(after, before)?);
    Ok(BatchOutcome { graph: next, operator: new_op, perturbation, alpha })
}

/// Block membership used by [`sample_sbm`]: blocks of `n / k` vertices, the
/// remainder going to the last block.
pub fn sbm_labels(n: usize, k: usize) -> Vec<usize> {
    let size = (n / k).max(1);
    (0..n).map(|i| (i / size).min(k - 1)).collect()
}

/// Samples a stochastic block model with `k` blocks.
pub fn sample_sbm(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(Graph, Vec<usize>)> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    for p in [p_in, p_out] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
    }
    let labels = sbm_labels(n, k);
    let mut rng = rng_from_seed(seed);
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                g.adj[u].push(v);
                g.adj[v].push(u);
                g.num_edges += 1;
            }
        }
    }
    Ok((g, labels))
}

/// Produces edit batches that move a graph toward a target graph with
/// probability `h` per edit and away from it otherwise.
pub struct NetworkInterpolation {
    target: Graph,
    h: f64,
    rng: Rng,
}

impl NetworkInterpolation {
    pub fn new(target: Graph, h: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&h) {
            return Err(Error::InvalidArgument(format!("h must lie in [0, 1], got {h}")));
        }
        Ok(Self { target, h, rng: rng_from_seed(seed) })
    }

    pub fn target(&self) -> &Graph {
        &self.target
    }

    /// Draws a batch of `size` edits on distinct pairs for `current`.
    pub fn next_batch(&mut self, current: &Graph, size: usize) -> Result<EditBatch> {
        if current.n() != self.target.n() {
            return Err(Error::DimensionMismatch("current and target graphs differ in size".into()));
        }
        let mut diff = current.symmetric_difference(&self.target)?;
        diff.shuffle(&mut self.rng);
        let mut common: Option<Vec<Pair>> = None;
        let mut touched: HashSet<Pair> = HashSet::new();
        let mut batch = EditBatch::default();
        for _ in 0..size {
            let toward_first = self.rng.random::<f64>() < self.h;
            let order = if toward_first { [true, false] } else { [false, true] };
            let mut done = false;
            for toward in order {
                let allowed = if toward { self.h > 0.0 } else { self.h < 1.0 };
                if !allowed {
                    continue;
                }
                let pick = if toward {
                    self.toward_edit(current, &mut diff, &touched)
                } else {
                    self.away_edit(current, &mut common, &touched)
                };
                if let Some((pair, add)) = pick {
                    touched.insert(pair);
                    if add {
                        batch.additions.push(pair);
                    } else {
                        batch.deletions.push(pair);
                    }
                    done = true;
                    break;
                }
            }
            if !done {
                if batch.is_empty() {
                    return Err(Error::Exhausted);
                }
                break;
            }
        }
        Ok(batch)
    }

    fn toward_edit(&mut self, current: &Graph, diff: &mut Vec<Pair>, touched: &HashSet<Pair>) -> Option<(Pair, bool)> {
        while let Some(pair) = diff.pop() {
            if !touched.contains(&pair) {
                return Some((pair, !current.has_edge(pair.0, pair.1)));
            }
        }
        None
    }

    fn away_edit(&mut self, current: &Graph, common: &mut Option<Vec<Pair>>, touched: &HashSet<Pair>) -> Option<(Pair, bool)> {
        let add_first = self.rng.random::<bool>();
        for add in [add_first, !add_first] {
            let pick = if add {
                self.absent_pair(current, touched)
            } else {
                self.common_edge(current, common, touched)
            };
            if let Some(pair) = pick {
                return Some((pair, add));
            }
        }
        None
    }

    fn absent_pair(&mut self, current: &Graph, touched: &HashSet<Pair>) -> Option<Pair> {
        let n = current.n();
        if n < 2 {
            return None;
        }
        let ok = |p: Pair| !current.has_edge(p.0, p.1) && !self.target.has_edge(p.0, p.1) && !touched.contains(&p);
        for _ in 0..10_000 {
            let u = self.rng.random_range(0..n);
            let v = self.rng.random_range(0..n);
            if u != v && ok(ordered_pair(u, v)) {
                return Some(ordered_pair(u, v));
            }
        }
        let all: Vec<Pair> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).filter(|&p| ok(p)).collect();
        all.choose(&mut self.rng).copied()
    }

    fn common_edge(&mut self, current: &Graph, common: &mut Option<Vec<Pair>>, touched: &HashSet<Pair>) -> Option<Pair> {
        let list = common.get_or_insert_with(|| {
            let mut c: Vec<Pair> = current.edges().into_iter().filter(|&(u, v)| self.target.has_edge(u, v)).collect();
            c.shuffle(&mut self.rng);
            c
        });
        while let Some(pair) = list.pop() {
            if !touched.contains(&pair) {
                return Some(pair);
            }
        }
        None
    }
}

/// Timestamped edges over compact vertex ids.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalEdges {
    pub n: usize,
    /// `(u, v, timestamp)` with `u < v`, sorted by timestamp (stable).
    pub edges: Vec<(usize, usize, f64)>,
    /// Original identifier of each compact vertex id.
    pub original_ids: Vec<u64>,
}

/// Parses whitespace separated `src dst timestamp` lines.
///
/// Lines starting with `#` and blank lines are ignored, self-loops are
/// dropped, and repeated pairs (either orientation) keep their earliest
/// occurrence. Vertex ids are compacted in increasing order of the original id.
pub fn parse_temporal_edges(reader: impl BufRead) -> Result<TemporalEdges> {
    let mut raw: Vec<(u64, u64, f64)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let bad = |message: String| Error::Parse { line: i + 1, message };
        if fields.len() < 3 {
            return Err(bad(format!("expected `src dst timestamp`, found {} fields", fields.len())));
        }
        let src = fields[0].parse::<u64>().map_err(|e| bad(format!("source id: {e}")))?;
        let dst = fields[1].parse::<u64>().map_err(|e| bad(format!("target id: {e}")))?;
        let ts = fields[2].parse::<f64>().map_err(|e| bad(format!("timestamp: {e}")))?;
        if !ts.is_finite() {
            return Err(bad("timestamp is not finite".into()));
        }
        if src != dst {
            raw.push((src, dst, ts));
        }
    }
    if raw.is_empty() {
        return Err(Error::EmptyStream);
    }
    raw.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut ids: Vec<u64> = raw.iter().flat_map(|&(a, b, _)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index = |id: u64| ids.binary_search(&id).expect("id collected");
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for (a, b, ts) in raw {
        let pair = ordered_pair(index(a), index(b));
        if seen.insert(pair) {
            edges.push((pair.0, pair.1, ts));
        }
    }
    Ok(TemporalEdges { n: ids.len(), edges, original_ids: ids })
}

pub fn load_temporal_edges(path: &Path) -> Result<TemporalEdges> {
    let file = std::fs::File::open(path)?;
    parse_temporal_edges(std::io::BufReader::new(file))
}

/// Restricts the stream to the largest connected component of its final
/// graph. Ties go to the component containing the smallest vertex id; kept
/// vertices are relabelled in increasing order of their old ids.
pub fn largest_connected_component(stream: &TemporalEdges) -> TemporalEdges {
    let n = stream.n;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v, _) in &stream.edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            parent[hi] = lo;
        }
    }
    let mut size = vec![0usize; n];
    let roots: Vec<usize> = (0..n).map(|v| find(&mut parent, v)).collect();
    for &r in &roots {
        size[r] += 1;
    }
    // Roots are the smallest member of their component, so scanning in
    // increasing order resolves ties toward the smallest id.
    let best = (0..n).filter(|&v| roots[v] == v).max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a))).unwrap_or(0);
    let mut relabel = vec![usize::MAX; n];
    let mut original_ids = Vec::new();
    for v in 0..n {
        if roots[v] == best {
            relabel[v] = original_ids.len();
            original_ids.push(stream.original_ids[v]);
        }
    }
    let edges = stream
        .edges
        .iter()
        .filter(|(u, _, _)| roots[*u] == best)
        .map(|&(u, v, ts)| {
            let p = ordered_pair(relabel[u], relabel[v]);
            (p.0, p.1, ts)
        })
        .collect();
    TemporalEdges { n: original_ids.len(), edges, original_ids }
}

/// A synthetic temporal stream: edges of an SBM sample arriving in random order.
pub fn synthetic_temporal_stream(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Result<TemporalEdges> {
    let (g, _) = sample_sbm(n, k, p_in, p_out, seed)?;
    let mut edges = g.edges();
    let mut rng = rng_from_seed(seed ^ 0x5EED);
    edges.shuffle(&mut rng);
    let edges = edges.into_iter().enumerate().map(|(t, (u, v))| (u, v, t as f64)).collect();
    Ok(TemporalEdges { n, edges, original_ids: (0..n as u64).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorExt;

    fn path() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap()
    }

    #[test]
    fn bound_example() {
        let b = sparse_update_bound(0.1, 4.0, 2).unwrap();
        assert!((b - 0.254446).abs() < 1e-6);
        assert!(matches!(sparse_update_bound(1.0, 4.0, 2), Err(Error::DegreeViolation(_))));
    }

    #[test]
    fn alpha_uses_pre_update_degrees() {
        let g = path();
        let batch = EditBatch { additions: vec![(0, 2)], deletions: vec![] };
        assert_eq!(relative_degree_change(&g, &batch, 0.0), 1.0);
        assert_eq!(relative_degree_change(&g, &batch, 1.0), 0.5);
    }

    #[test]
    fn deleting_only_edge_of_leaf_violates_degree_condition() {
        let g = path();
        let op = Arc::new(g.normalized_operator(0.0).unwrap());
        let batch = EditBatch { additions: vec![], deletions: vec![(0, 1)] };
        assert!(matches!(apply_batch(&g, &op, &batch), Err(Error::DegreeViolation(a)) if a == 1.0));
    }

    #[test]
    fn invalid_batches_are_rejected() {
        let g = path();
        let op = Arc::new(g.normalized_operator(1.0).unwrap());
        for batch in [
            EditBatch { additions: vec![(0, 1)], deletions: vec![] },
            EditBatch { additions: vec![], deletions: vec![(0, 3)] },
            EditBatch { additions: vec![(2, 2)], deletions: vec![] },
            EditBatch { additions: vec![(0, 2), (2, 0)], deletions: vec![] },
        ] {
            assert!(matches!(apply_batch_unchecked_alpha(&g, &op, &batch), Err(Error::InvalidEdit(_))));
        }
    }

    #[test]
    fn perturbation_matches_dense_difference() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let op = Arc::new(g.normalized_operator(0.5).unwrap());
        let batch = EditBatch { additions: vec![(0, 2)], deletions: vec![(3, 4)] };
        let out = apply_batch_unchecked_alpha(&g, &op, &batch).unwrap();
        let want = out.operator.to_dense().sub(&op.to_dense()).unwrap();
        assert!(out.perturbation.to_dense().sub(&want).unwrap().max_abs() < 1e-15);
        assert_eq!(out.graph.num_edges(), 5);
    }

    #[test]
    fn sbm_block_sizes_and_density() {
        let labels = sbm_labels(10, 3);
        assert_eq!(labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 2]);
        let (g, _) = sample_sbm(6, 2, 1.0, 0.0, 3).unwrap();
        assert_eq!(g.num_edges(), 6);
        assert!(!g.has_edge(0, 3));
    }

    #[test]
    fn full_toward_interpolation_reaches_target_then_exhausts() {
        let (a, _) = sample_sbm(20, 2, 0.5, 0.1, 1).unwrap();
        let (b, _) = sample_sbm(20, 4, 0.5, 0.1, 2).unwrap();
        let mut interp = NetworkInterpolation::new(b.clone(), 1.0, 5).unwrap();
        let mut g = a;
        let op0 = Arc::new(g.normalized_operator(1.0).unwrap());
        let mut op = op0;
        while let Ok(batch) = interp.next_batch(&g, 7) {
            let before = g.edit_distance(&b).unwrap();
            let out = apply_batch_unchecked_alpha(&g, &op, &batch).unwrap();
            assert_eq!(out.graph.edit_distance(&b).unwrap(), before - batch.len());
            g = out.graph;
            op = out.operator;
        }
        assert_eq!(g, b);
        assert_eq!(interp.next_batch(&g, 1).unwrap_err(), Error::Exhausted);
    }

    #[test]
    fn parse_dedups_and_compacts() {
        let text = "# header\n10 20 5\n20 10 1\n\n30 30 2\n20 40 3\n";
        let s = parse_temporal_edges(text.as_bytes()).unwrap();
        assert_eq!(s.original_ids, vec![10, 20, 40]);
        assert_eq!(s.edges, vec![(0, 1, 1.0), (1, 2, 3.0)]);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_temporal_edges("1 2 3\n1 x 4\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert_eq!(parse_temporal_edges("# nothing\n".as_bytes()).unwrap_err(), Error::EmptyStream);
    }

    #[test]
    fn component_selection_prefers_larger_then_smaller_id() {
        let text = "1 2 0\n3 4 1\n4 5 2\n7 8 3\n";
        let s = largest_connected_component(&parse_temporal_edges(text.as_bytes()).unwrap());
        assert_eq!(s.original_ids, vec![3, 4, 5]);
        let tie = largest_connected_component(&parse_temporal_edges("5 6 0\n1 2 1\n".as_bytes()).unwrap());
        assert_eq!(tie.original_ids, vec![1, 2]);
    }
}
