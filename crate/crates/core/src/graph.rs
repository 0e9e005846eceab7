//! Time-varying directed graphs and their column-stochastic mixing matrices.
//!
//! Nodes are indexed from 0. An edge `(from, to)` means `to` receives from
//! `from`. Self-loops are never stored; every node implicitly keeps a
//! positive weight on itself.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{keyed, Domain};
use crate::{Error, Matrix, Result, Vector};

/// Tolerance on `|column sum - 1|`.
pub const COLUMN_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn new(from: usize, to: usize) -> Self {
        Edge { from, to }
    }
}

/// The communication graph of a single round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundGraph {
    pub t: usize,
    pub n: usize,
    edges: Vec<Edge>,
}

impl RoundGraph {
    /// Builds a round graph, dropping duplicate edges.
    pub fn new(t: usize, n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidArgument("round index starts at 1".into()));
        }
        let mut set = BTreeSet::new();
        for e in edges {
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge {}->{} out of range for {n} nodes",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::InvalidArgument(format!(
                    "explicit self-loop at node {}",
                    e.from
                )));
            }
            set.insert(e);
        }
        Ok(RoundGraph {
            t,
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Out-degree of `j`, counting its implicit self-loop.
    pub fn out_degree(&self, j: usize) -> usize {
        1 + self.edges.iter().filter(|e| e.from == j).count()
    }
}

/// Column-stochastic weights `w[i][j]` applied by receiver `i` to sender `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    w: Matrix,
    floor: f64,
}

impl MixingMatrix {
    /// Wraps explicit weights, checking nonnegativity and column sums.
    pub fn from_weights(w: Matrix, floor: f64) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::DimensionMismatch {
                context: "mixing matrix",
                expected: w.nrows(),
                actual: w.ncols(),
            });
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "mixing weights must be finite and nonnegative".into(),
            ));
        }
        let m = MixingMatrix { w, floor };
        if m.max_column_error() > COLUMN_SUM_TOL {
            return Err(Error::InvalidArgument(
                "mixing matrix is not column stochastic".into(),
            ));
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        MixingMatrix {
            w: Matrix::identity(n, n),
            floor: 1.0,
        }
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.w
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// Declared positivity floor `a`.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.w.column_iter().map(|c| c.sum()).collect()
    }

    pub fn max_column_error(&self) -> f64 {
        self.column_sums()
            .into_iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_positive(&self) -> f64 {
        self.w
            .iter()
            .copied()
            .filter(|v| *v > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// `out[i] = sum_j w[i][j] * values[j]`.
    pub fn mix_scalars(&self, values: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                (0..self.n())
                    .map(|j| self.w[(i, j)] * values[j])
                    .sum::<f64>()
            })
            .collect()
    }

    /// Block version of [`mix_scalars`](Self::mix_scalars).
    pub fn mix_vectors(&self, values: &[Vector]) -> Vec<Vector> {
        let dim = values.first().map_or(0, |v| v.len());
        (0..self.n())
            .map(|i| {
                let mut acc = Vector::zeros(dim);
                for (j, v) in values.iter().enumerate() {
                    let w = self.w[(i, j)];
                    if w != 0.0 {
                        acc.axpy(w, v, 1.0);
                    }
                }
                acc
            })
            .collect()
    }
}

/// Out-degree rule: sender `j` splits its mass evenly over its out-neighbors
/// and itself. The positivity floor is `1/n`.
pub fn build_out_degree_mixing(g: &RoundGraph) -> MixingMatrix {
    let n = g.n;
    let mut w = Matrix::zeros(n, n);
    let mut degree = vec![1usize; n];
    for e in g.edges() {
        degree[e.from] += 1;
    }
    for j in 0..n {
        w[(j, j)] = 1.0 / degree[j] as f64;
    }
    for e in g.edges() {
        w[(e.to, e.from)] = 1.0 / degree[e.from] as f64;
    }
    MixingMatrix {
        w,
        floor: 1.0 / n as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    StaticRing,
    StaticComplete,
    CyclicPartition,
    RandomBConnected,
}

impl GraphKind {
    pub const ALL: [GraphKind; 4] = [
        GraphKind::StaticRing,
        GraphKind::StaticComplete,
        GraphKind::CyclicPartition,
        GraphKind::RandomBConnected,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GraphKind::StaticRing => "static_ring",
            GraphKind::StaticComplete => "static_complete",
            GraphKind::CyclicPartition => "cyclic_partition",
            GraphKind::RandomBConnected => "random_bconnected",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GraphKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownGraphKind(s.to_string()))
    }
}

/// Probability of each extra (non-cycle) edge in `random_bconnected` rounds
/// and in the `cyclic_partition` base graph.
const EXTRA_EDGE_PROB: f64 = 0.2;

#[derive(Debug, Clone)]
enum Source {
    /// Round `t` uses `rounds[(t - 1) % rounds.len()]`.
    Periodic(Vec<Vec<Edge>>),
    RandomWindows { seed: u64 },
}

/// A deterministic map from round index to graph with a declared
/// connectivity window `B`.
#[derive(Debug, Clone)]
pub struct GraphSequence {
    n: usize,
    window: usize,
    source: Source,
}

impl GraphSequence {
    /// Builds one of the named generators. The result is a pure function of
    /// the arguments.
    pub fn generate(kind: GraphKind, n: usize, window: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "graph needs at least 2 nodes, got {n}"
            )));
        }
        if window == 0 {
            return Err(Error::InvalidArgument(
                "connectivity window must be positive".into(),
            ));
        }
        let source = match kind {
            GraphKind::StaticRing => Source::Periodic(vec![ring_edges(n)]),
            GraphKind::StaticComplete => {
                let edges = (0..n)
                    .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| Edge::new(j, i)))
                    .collect();
                Source::Periodic(vec![edges])
            }
            GraphKind::CyclicPartition => Source::Periodic(cyclic_partition(n, window, seed)),
            GraphKind::RandomBConnected => Source::RandomWindows { seed },
        };
        Ok(GraphSequence { n, window, source })
    }

    /// A sequence that cycles through explicit per-round edge sets.
    pub fn periodic(n: usize, window: usize, rounds: Vec<Vec<Edge>>) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::InvalidArgument("empty round list".into()));
        }
        if window == 0 {
            return Err(Error::InvalidArgument(
                "connectivity window must be positive".into(),
            ));
        }
        for (k, r) in rounds.iter().enumerate() {
            RoundGraph::new(k + 1, n, r.iter().copied())?;
        }
        Ok(GraphSequence {
            n,
            window,
            source: Source::Periodic(rounds),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Same rounds, different declared window.
    pub fn with_window(&self, window: usize) -> Self {
        GraphSequence {
            window: window.max(1),
            ..self.clone()
        }
    }

    pub fn graph(&self, t: usize) -> RoundGraph {
        let t = t.max(1);
        let edges = match &self.source {
            Source::Periodic(rounds) => rounds[(t - 1) % rounds.len()].clone(),
            Source::RandomWindows { seed } => random_window_round(self.n, self.window, *seed, t),
        };
        // Generated edge lists are valid by construction.
        RoundGraph::new(t, self.n, edges).expect("generated edges are in range")
    }

    pub fn mixing(&self, t: usize) -> MixingMatrix {
        build_out_degree_mixing(&self.graph(t))
    }

    /// Rows `t,from,to,weight` for rounds `1..=horizon`, self-weights included.
    pub fn edge_csv(&self, horizon: usize) -> String {
        let mut out = String::from("t,from,to,weight\n");
        for t in 1..=horizon {
            let w = self.mixing(t);
            for j in 0..self.n {
                for i in 0..self.n {
                    let v = w.get(i, j);
                    if v > 0.0 {
                        out.push_str(&format!("{t},{j},{i},{v}\n"));
                    }
                }
            }
        }
        out
    }
}

fn ring_edges(n: usize) -> Vec<Edge> {
    (0..n).map(|j| Edge::new(j, (j + 1) % n)).collect()
}

/// Strongly connected base digraph (a Hamiltonian cycle over a random
/// permutation plus random chords) whose edges are dealt into `window`
/// subsets. Subsets may be empty when the base has fewer edges than `window`;
/// the union over any `window` consecutive rounds is always the base graph.
fn cyclic_partition(n: usize, window: usize, seed: u64) -> Vec<Vec<Edge>> {
    let mut rng = keyed(seed, Domain::GraphBase, n as u64, window as u64);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut base: BTreeSet<Edge> = (0..n)
        .map(|k| Edge::new(perm[k], perm[(k + 1) % n]))
        .collect();
    for j in 0..n {
        for i in 0..n {
            if i != j && rng.random_bool(EXTRA_EDGE_PROB) {
                base.insert(Edge::new(j, i));
            }
        }
    }
    let mut edges: Vec<Edge> = base.into_iter().collect();
    edges.shuffle(&mut rng);
    (0..window)
        .map(|k| edges.iter().skip(k).step_by(window).copied().collect())
        .collect()
}

/// Round `t` of a `random_bconnected` sequence: the cycle edges the window
/// assigned to this round plus independent random extras.
fn random_window_round(n: usize, window: usize, seed: u64, t: usize) -> Vec<Edge> {
    let k = (t - 1) / window;
    let slot = (t - 1) % window;
    let mut wrng = keyed(seed, Domain::GraphWindow, n as u64, k as u64);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut wrng);
    let mut edges = BTreeSet::new();
    for q in 0..n {
        let assigned = wrng.random_range(0..window);
        if assigned == slot {
            edges.insert(Edge::new(perm[q], perm[(q + 1) % n]));
        }
    }
    let mut rrng = keyed(seed, Domain::GraphRound, n as u64, t as u64);
    for j in 0..n {
        for i in 0..n {
            if i != j && rrng.random_bool(EXTRA_EDGE_PROB / window as f64) {
                edges.insert(Edge::new(j, i));
            }
        }
    }
    edges.into_iter().collect()
}

/// True if every node reaches every other node along `edges`.
pub fn strongly_connected(n: usize, edges: &[Edge]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.from].push(e.to);
    }
    (0..n).all(|src| {
        let mut seen = vec![false; n];
        seen[src] = true;
        let mut queue = VecDeque::from([src]);
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundCheck {
    pub t: usize,
    pub max_column_error: f64,
    pub min_positive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Item 1: a positive weight below the floor.
    WeightFloor { t: usize, min_positive: f64 },
    /// Item 2: a column does not sum to one.
    ColumnSum { t: usize, error: f64 },
    /// Item 3: the union over window `k` (rounds `kB+1..=(k+1)B`) is not
    /// strongly connected.
    Disconnected { window: usize },
}

impl Violation {
    pub fn item(&self) -> u8 {
        match self {
            Violation::WeightFloor { .. } => 1,
            Violation::ColumnSum { .. } => 2,
            Violation::Disconnected { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rounds: Vec<RoundCheck>,
    pub windows_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the three network conditions over rounds `1..=horizon`. Only
/// complete windows are checked for connectivity.
pub fn validate_assumption1(
    seq: &GraphSequence,
    horizon: usize,
    floor: f64,
) -> Result<ValidationReport> {
    let b = seq.window();
    if horizon < b {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} shorter than window {b}"
        )));
    }
    let mut rounds = Vec::with_capacity(horizon);
    let mut violations = Vec::new();
    for t in 1..=horizon {
        let w = seq.mixing(t);
        let check = RoundCheck {
            t,
            max_column_error: w.max_column_error(),
            min_positive: w.min_positive(),
        };
        if check.min_positive < floor {
            violations.push(Violation::WeightFloor {
                t,
                min_positive: check.min_positive,
            });
        }
        if check.max_column_error > COLUMN_SUM_TOL {
            violations.push(Violation::ColumnSum {
                t,
                error: check.max_column_error,
            });
        }
        rounds.push(check);
    }
    let windows = horizon / b;
    for k in 0..windows {
        let union: Vec<Edge> = (k * b + 1..=(k + 1) * b)
            .flat_map(|t| seq.graph(t).edges().to_vec())
            .collect();
        if !strongly_connected(seq.n(), &union) {
            violations.push(Violation::Disconnected { window: k });
        }
    }
    Ok(ValidationReport {
        rounds,
        windows_checked: windows,
        violations,
    })
}

/// Parses `t,from,to[,weight]` rows into a periodic sequence. Self-loop rows
/// and the weight column are ignored; weights come from the out-degree rule.
pub fn parse_edge_csv(text: &str, n: usize, window: usize) -> Result<GraphSequence> {
    let mut rounds: Vec<Vec<Edge>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || (idx == 0 && line.starts_with('t')) {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(perr(format!("expected 3 or 4 fields, got {}", fields.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|e| perr(format!("`{s}`: {e}")));
        let (t, from, to) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        if let Some(w) = fields.get(3) {
            w.parse::<f64>()
                .map_err(|e| perr(format!("weight `{w}`: {e}")))?;
        }
        if t == 0 || t > 1_000_000 {
            return Err(perr(format!("round {t} out of range")));
        }
        if from >= n || to >= n {
            return Err(perr(format!("node out of range for {n} nodes")));
        }
        if rounds.len() < t {
            rounds.resize(t, Vec::new());
        }
        if from != to {
            rounds[t - 1].push(Edge::new(from, to));
        }
    }
    GraphSequence::periodic(n, window, rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense(m: &MixingMatrix) -> Vec<Vec<f64>> {
        (0..m.n())
            .map(|i| (0..m.n()).map(|j| m.get(i, j)).collect())
            .collect()
    }

    #[test]
    fn out_degree_two_nodes() {
        let g = RoundGraph::new(1, 2, [Edge::new(0, 1)]).unwrap();
        let w = build_out_degree_mixing(&g);
        assert_eq!(dense(&w), vec![vec![0.5, 0.0], vec![0.5, 1.0]]);
    }

    #[test]
    fn out_degree_empty_is_identity() {
        let g = RoundGraph::new(1, 3, []).unwrap();
        let w = build_out_degree_mixing(&g);
        assert_eq!(w.weights(), &Matrix::identity(3, 3));
    }

    #[test]
    fn out_degree_complete_is_uniform() {
        let seq = GraphSequence::generate(GraphKind::StaticComplete, 3, 1, 0).unwrap();
        let w = seq.mixing(5);
        assert!(w.weights().iter().all(|&v| v == 1.0 / 3.0));
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(RoundGraph::new(1, 3, [Edge::new(1, 1)]).is_err());
        assert!(RoundGraph::new(1, 3, [Edge::new(0, 3)]).is_err());
        assert!(RoundGraph::new(0, 3, []).is_err());
    }

    #[test]
    fn static_ring_repeats() {
        let seq = GraphSequence::generate(GraphKind::StaticRing, 3, 1, 17).unwrap();
        let expected = vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(2, 0)];
        for t in 1..6 {
            assert_eq!(seq.graph(t).edges(), expected.as_slice());
        }
        assert!(validate_assumption1(&seq, 10, 1.0 / 3.0).unwrap().passed());
    }

    #[test]
    fn split_ring_needs_window_two() {
        // 0->1->2->3->0 split into {0->1, 2->3} and {1->2, 3->0}.
        let rounds = vec![
            vec![Edge::new(0, 1), Edge::new(2, 3)],
            vec![Edge::new(1, 2), Edge::new(3, 0)],
        ];
        let seq = GraphSequence::periodic(4, 2, rounds).unwrap();
        assert!(validate_assumption1(&seq, 20, 0.25).unwrap().passed());
        let report = validate_assumption1(&seq.with_window(1), 20, 0.25).unwrap();
        assert!(!report.passed());
        assert_eq!(report.violations.len(), 20);
        assert!(report.violations.iter().all(|v| v.item() == 3));
    }

    #[test]
    fn empty_graphs_fail_every_window() {
        let seq = GraphSequence::periodic(3, 2, vec![vec![]]).unwrap();
        let report = validate_assumption1(&seq, 10, 1.0 / 3.0).unwrap();
        assert_eq!(report.windows_checked, 5);
        assert_eq!(
            report.violations,
            (0..5).map(|window| Violation::Disconnected { window }).collect::<Vec<_>>()
        );
    }

    #[test]
    fn validation_requires_full_window() {
        let seq = GraphSequence::generate(GraphKind::StaticRing, 3, 4, 0).unwrap();
        assert!(validate_assumption1(&seq, 3, 0.1).is_err());
    }

    #[test]
    fn floor_violation_reported() {
        let seq = GraphSequence::generate(GraphKind::StaticComplete, 4, 1, 0).unwrap();
        let report = validate_assumption1(&seq, 3, 0.3).unwrap();
        assert_eq!(report.violations.len(), 3);
        assert!(report.violations.iter().all(|v| v.item() == 1));
    }

    #[test]
    fn cyclic_partition_alternates() {
        let seq = GraphSequence::generate(GraphKind::CyclicPartition, 4, 2, 9).unwrap();
        assert_eq!(seq.graph(1), RoundGraph { t: 1, ..seq.graph(3) });
        assert_eq!(seq.graph(2), RoundGraph { t: 2, ..seq.graph(4) });
        assert_ne!(seq.graph(1).edges(), seq.graph(2).edges());
        assert!(validate_assumption1(&seq, 40, 0.25).unwrap().passed());
        let again = GraphSequence::generate(GraphKind::CyclicPartition, 4, 2, 9).unwrap();
        for t in 1..10 {
            assert_eq!(seq.mixing(t), again.mixing(t));
        }
    }

    #[test]
    fn cyclic_partition_grid_passes() {
        for n in 2..=10 {
            for b in 1..=10 {
                for seed in 0..3 {
                    let seq = GraphSequence::generate(GraphKind::CyclicPartition, n, b, seed).unwrap();
                    let report = validate_assumption1(&seq, 3 * b, 1.0 / n as f64).unwrap();
                    assert!(report.passed(), "n={n} b={b} seed={seed}: {:?}", report.violations);
                }
            }
        }
    }

    #[test]
    fn random_bconnected_passes() {
        for (n, b) in [(2, 1), (4, 2), (7, 3), (10, 10)] {
            let seq = GraphSequence::generate(GraphKind::RandomBConnected, n, b, 5).unwrap();
            assert!(validate_assumption1(&seq, 20 * b, 1.0 / n as f64).unwrap().passed());
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in GraphKind::ALL {
            assert_eq!(k.name().parse::<GraphKind>().unwrap(), k);
        }
        assert!(matches!(
            "ring".parse::<GraphKind>(),
            Err(Error::UnknownGraphKind(_))
        ));
        assert!(GraphSequence::generate(GraphKind::StaticRing, 1, 1, 0).is_err());
    }

    #[test]
    fn edge_csv_round_trips() {
        let seq = GraphSequence::generate(GraphKind::CyclicPartition, 5, 3, 2).unwrap();
        let csv = seq.edge_csv(3);
        let back = parse_edge_csv(&csv, 5, 3).unwrap();
        for t in 1..=9 {
            assert_eq!(back.mixing(t), seq.mixing(t));
        }
        assert!(parse_edge_csv("t,from,to\n1,0,9\n", 5, 1).is_err());
        assert!(parse_edge_csv("1,0\n", 5, 1).is_err());
    }

    #[test]
    fn mixing_preserves_mass() {
        let seq = GraphSequence::generate(GraphKind::RandomBConnected, 6, 2, 1).unwrap();
        let w = seq.mixing(3);
        let v = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mixed = w.mix_scalars(&v);
        assert!((mixed.iter().sum::<f64>() - 21.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn out_degree_mixing_invariants(
            n in 2usize..12,
            raw in proptest::collection::vec((0usize..12, 0usize..12), 0..60),
        ) {
            let edges = raw.into_iter()
                .map(|(a, b)| (a % n, b % n))
                .filter(|(a, b)| a != b)
                .map(|(a, b)| Edge::new(a, b));
            let g = RoundGraph::new(1, n, edges).unwrap();
            let w = build_out_degree_mixing(&g);
            prop_assert!(w.max_column_error() <= COLUMN_SUM_TOL);
            prop_assert!(w.min_positive() >= 1.0 / n as f64);
            for i in 0..n {
                for j in 0..n {
                    let linked = i == j || g.edges().contains(&Edge::new(j, i));
                    prop_assert_eq!(w.get(i, j) > 0.0, linked);
                }
            }
        }

        #[test]
        fn generators_are_deterministic(kind in 0usize..4, n in 2usize..9, b in 1usize..5, seed: u64) {
            let kind = GraphKind::ALL[kind];
            let a = GraphSequence::generate(kind, n, b, seed).unwrap();
            let c = GraphSequence::generate(kind, n, b, seed).unwrap();
            for t in 1..=2 * b {
                let (wa, wc) = (a.mixing(t), c.mixing(t));
                prop_assert!(wa.weights().iter().zip(wc.weights().iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
                prop_assert!(wa.max_column_error() <= COLUMN_SUM_TOL);
            }
        }
    }
}
