//! Communication graphs, doubly stochastic mixing matrices and spectral gaps.
//!
//! Nodes are indexed from 0 internally. The adjacency-list text format used
//! for custom graphs is 1-based (`i r` means node `i` sends to node `r`).

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops::pairwise_sum;

/// Absolute tolerance for row and column sums of a mixing matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Relative residual tolerance of the spectral-gap power iteration.
pub const SPECTRAL_TOL: f64 = 1e-10;

const SPECTRAL_MAX_ITERS: usize = 500_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Ring,
    DirectedExponential,
    Complete,
    Custom,
}

impl TopologyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Ring => "ring",
            TopologyKind::DirectedExponential => "directed-exponential",
            TopologyKind::Complete => "complete",
            TopologyKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(TopologyKind::Ring),
            "directed-exponential" | "exponential" | "exp" => Ok(TopologyKind::DirectedExponential),
            "complete" => Ok(TopologyKind::Complete),
            "custom" => Ok(TopologyKind::Custom),
            other => Err(Error::InvalidInput(format!("unknown topology kind `{other}`"))),
        }
    }
}

/// Rule used to turn a graph into mixing weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Metropolis,
    Uniform,
    Laplacian,
}

/// Directed edge set over `n` nodes; `(i, r)` means node `i` sends to node `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    kind: TopologyKind,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, kind: TopologyKind) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("graph needs n >= 2, got {n}")));
        }
        let mut set = BTreeSet::new();
        for (i, r) in edges {
            if i >= n || r >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    i + 1,
                    r + 1
                )));
            }
            if i == r {
                return Err(Error::InvalidInput(format!("self loop at node {}", i + 1)));
            }
            set.insert((i, r));
        }
        Ok(Self { n, edges: set, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, r: usize) -> bool {
        self.edges.contains(&(i, r))
    }

    pub fn out_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .range((i, 0)..(i + 1, 0))
            .map(|&(_, r)| r)
            .collect()
    }

    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, r)| r == i)
            .map(|&(s, _)| s)
            .collect()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.range((i, 0)..(i + 1, 0)).count()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(_, r)| r == i).count()
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges.iter().all(|&(i, r)| self.edges.contains(&(r, i)))
    }

    pub fn is_weight_balanced(&self) -> bool {
        (0..self.n).all(|i| self.in_degree(i) == self.out_degree(i))
    }

    /// Strong connectivity via forward and backward reachability from node 0.
    pub fn is_strongly_connected(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for &(a, b) in &self.edges {
                    let (from, to) = if forward { (a, b) } else { (b, a) };
                    if from == u && !seen[to] {
                        seen[to] = true;
                        queue.push_back(to);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Parse the 1-based adjacency-list format: one `i r` pair per line,
    /// `#` starts a comment. When `n` is `None` it is the largest index seen.
    pub fn parse_adjacency(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_index = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next_index = || -> Result<usize> {
                let tok = fields.next().ok_or_else(|| Error::Parse {
                    line: lineno + 1,
                    reason: "expected two node indices".into(),
                })?;
                let v: usize = tok.parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    reason: format!("`{tok}` is not a node index"),
                })?;
                if v == 0 {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        reason: "node indices are 1-based".into(),
                    });
                }
                Ok(v)
            };
            let i = next_index()?;
            let r = next_index()?;
            if fields.next().is_some() {
                return Err(Error::Parse {
                    line: lineno + 1,
                    reason: "trailing tokens after edge".into(),
                });
            }
            max_index = max_index.max(i).max(r);
            edges.push((i - 1, r - 1));
        }
        let n = n.unwrap_or(max_index);
        Graph::new(n, edges, TopologyKind::Custom)
    }

    /// Inverse of [`Graph::parse_adjacency`].
    pub fn to_adjacency(&self) -> String {
        let mut out = format!("# {} graph, n = {}\n", self.kind.as_str(), self.n);
        for &(i, r) in &self.edges {
            out.push_str(&format!("{} {}\n", i + 1, r + 1));
        }
        out
    }
}

/// Build one of the three standard families.
pub fn build_graph(kind: TopologyKind, n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("graph needs n >= 2, got {n}")));
    }
    let mut edges = Vec::new();
    match kind {
        TopologyKind::Ring => {
            for i in 0..n {
                let next = (i + 1) % n;
                edges.push((i, next));
                edges.push((next, i));
            }
        }
        TopologyKind::DirectedExponential => {
            for i in 0..n {
                let mut hop = 1usize;
                while hop < n {
                    edges.push((i, (i + hop) % n));
                    hop <<= 1;
                }
            }
        }
        TopologyKind::Complete => {
            for i in 0..n {
                for r in 0..n {
                    if i != r {
                        edges.push((i, r));
                    }
                }
            }
        }
        TopologyKind::Custom => {
            return Err(Error::UnsupportedGraph(
                "custom graphs are loaded from an adjacency file".into(),
            ))
        }
    }
    Graph::new(n, edges, kind)
}

/// Nonnegative doubly stochastic weights with cached spectral gap.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    n: usize,
    w: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    lambda: f64,
}

impl MixingMatrix {
    /// Validate a dense row-major matrix and compute its spectral gap.
    pub fn from_dense(n: usize, w: Vec<f64>) -> Result<Self> {
        if n == 0 || w.len() != n * n {
            return Err(Error::InvalidSize(format!(
                "expected {n}x{n} entries, got {}",
                w.len()
            )));
        }
        check_doubly_stochastic(n, &w)?;
        let lambda = spectral_gap_dense(n, &w)?;
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|r| {
                        let v = w[i * n + r];
                        (v != 0.0).then_some((r, v))
                    })
                    .collect()
            })
            .collect();
        Ok(Self { n, w, rows, lambda })
    }

    /// `W = 11ᵀ/n`.
    pub fn averaging(n: usize) -> Result<Self> {
        Self::from_dense(n, vec![1.0 / n as f64; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, r: usize) -> f64 {
        self.w[i * self.n + r]
    }

    pub fn dense(&self) -> &[f64] {
        &self.w
    }

    /// Nonzero entries of row `i` in ascending column order.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Cached `‖W − 11ᵀ/n‖₂`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `w_ir > 0` exactly on `edges ∪ diagonal`, with `(r, i)` an edge.
    pub fn support_matches(&self, graph: &Graph) -> bool {
        graph.n() == self.n
            && (0..self.n).all(|i| {
                (0..self.n).all(|r| {
                    let expected = i == r || graph.has_edge(r, i);
                    (self.get(i, r) > 0.0) == expected
                })
            })
    }

    /// One gossip round: `out_i = Σ_r w_ir z_r`, summed in ascending `r`.
    pub fn mix(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        assert_eq!(inputs.len(), self.n, "one input vector per node");
        let dim = inputs.first().map_or(0, Vec::len);
        let mut terms = Vec::with_capacity(self.n);
        self.rows
            .iter()
            .map(|row| {
                (0..dim)
                    .map(|k| {
                        terms.clear();
                        terms.extend(row.iter().map(|&(r, w)| w * inputs[r][k]));
                        pairwise_sum(&terms)
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_doubly_stochastic(n: usize, w: &[f64]) -> Result<()> {
    if let Some(v) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::NotDoublyStochastic(format!("entry {v} is negative or non-finite")));
    }
    for i in 0..n {
        let row: f64 = pairwise_sum(&w[i * n..(i + 1) * n]);
        if (row - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotDoublyStochastic(format!("row {} sums to {row}", i + 1)));
        }
        let col: Vec<f64> = (0..n).map(|r| w[r * n + i]).collect();
        let col = pairwise_sum(&col);
        if (col - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::NotDoublyStochastic(format!("column {} sums to {col}", i + 1)));
        }
    }
    Ok(())
}

fn degrees(g: &Graph) -> Vec<usize> {
    (0..g.n()).map(|i| g.out_degree(i)).collect()
}

/// Metropolis weights `w_ir = 1/(1 + max(deg_i, deg_r))` on undirected graphs.
pub fn metropolis_weights(g: &Graph) -> Result<MixingMatrix> {
    if !g.is_symmetric() {
        return Err(Error::UnsupportedGraph(
            "Metropolis weights need an undirected (symmetric) graph".into(),
        ));
    }
    let n = g.n();
    let deg = degrees(g);
    let mut w = vec![0.0; n * n];
    for &(i, r) in g.edges() {
        w[i * n + r] = 1.0 / (1 + deg[i].max(deg[r])) as f64;
    }
    fill_diagonal(n, &mut w);
    MixingMatrix::from_dense(n, w)
}

/// `1/(d+1)` on self and every in-neighbor of a weight-balanced digraph with
/// constant out-degree `d`.
pub fn uniform_out_weights(g: &Graph) -> Result<MixingMatrix> {
    let n = g.n();
    let d = g.out_degree(0);
    if (0..n).any(|i| g.out_degree(i) != d) {
        return Err(Error::UnsupportedGraph(
            "uniform weights need a constant out-degree".into(),
        ));
    }
    if !g.is_weight_balanced() {
        return Err(Error::UnsupportedGraph(
            "uniform weights need a weight-balanced graph".into(),
        ));
    }
    let share = 1.0 / (d + 1) as f64;
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        w[i * n + i] = share;
    }
    for &(sender, receiver) in g.edges() {
        w[receiver * n + sender] = share;
    }
    MixingMatrix::from_dense(n, w)
}

/// `W = I − L/n` with `L` the graph Laplacian.
pub fn laplacian_weights(g: &Graph) -> Result<MixingMatrix> {
    if !g.is_symmetric() {
        return Err(Error::UnsupportedGraph(
            "Laplacian weights need an undirected (symmetric) graph".into(),
        ));
    }
    let n = g.n();
    let scale = 1.0 / n as f64;
    let mut w = vec![0.0; n * n];
    for &(i, r) in g.edges() {
        w[i * n + r] = scale;
    }
    fill_diagonal(n, &mut w);
    MixingMatrix::from_dense(n, w)
}

fn fill_diagonal(n: usize, w: &mut [f64]) {
    for i in 0..n {
        let off: Vec<f64> = (0..n).filter(|&r| r != i).map(|r| w[i * n + r]).collect();
        w[i * n + i] = 1.0 - pairwise_sum(&off);
    }
}

/// Mixing matrix for `graph` under `weighting`.
pub fn weights_for(graph: &Graph, weighting: Weighting) -> Result<MixingMatrix> {
    match weighting {
        Weighting::Metropolis => metropolis_weights(graph),
        Weighting::Uniform => uniform_out_weights(graph),
        Weighting::Laplacian => laplacian_weights(graph),
    }
}

/// `‖W − 11ᵀ/n‖₂`, recomputed from the entries.
pub fn spectral_gap(w: &MixingMatrix) -> Result<f64> {
    spectral_gap_dense(w.n(), w.dense())
}

/// Largest singular value of `D = W − 11ᵀ/n` by power iteration on `DᵀD`.
///
/// Stops once the eigen-residual `‖DᵀDv − θv‖` drops below
/// [`SPECTRAL_TOL`]`·θ`.
fn spectral_gap_dense(n: usize, w: &[f64]) -> Result<f64> {
    let inv_n = 1.0 / n as f64;
    let deflated: Vec<f64> = w.iter().map(|v| v - inv_n).collect();
    let apply = |x: &[f64], transpose: bool| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let terms: Vec<f64> = (0..n)
                    .map(|r| {
                        let a = if transpose { deflated[r * n + i] } else { deflated[i * n + r] };
                        a * x[r]
                    })
                    .collect();
                pairwise_sum(&terms)
            })
            .collect()
    };

    // Deterministic start vector with components along every direction.
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect();
    let mut theta = 0.0;
    for _ in 0..SPECTRAL_MAX_ITERS {
        let nv = crate::vecops::norm(&v);
        if nv < 1e-300 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mv = apply(&apply(&v, false), true);
        theta = crate::vecops::dot(&v, &mv);
        let scale = crate::vecops::norm(&mv);
        if scale < 1e-300 {
            return Ok(0.0);
        }
        let residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - theta * b).powi(2))
            .sum::<f64>()
            .sqrt();
        v = mv;
        if residual <= SPECTRAL_TOL * theta.abs() {
            break;
        }
    }
    let lambda = theta.max(0.0).sqrt();
    if lambda >= 1.0 - SPECTRAL_TOL {
        return Err(Error::NonPrimitive { lambda });
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn complete_three_edges() {
        let g = build_graph(TopologyKind::Complete, 3).unwrap();
        let expected: BTreeSet<_> = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)].into();
        assert_eq!(g.edges(), &expected);
    }

    #[test]
    fn ring_four_has_two_neighbors() {
        let g = build_graph(TopologyKind::Ring, 4).unwrap();
        for i in 0..4 {
            let mut nb = g.out_neighbors(i);
            nb.sort();
            let mut want = vec![(i + 3) % 4, (i + 1) % 4];
            want.sort();
            assert_eq!(nb, want);
        }
    }

    #[test]
    fn directed_exponential_hops() {
        let g = build_graph(TopologyKind::DirectedExponential, 8).unwrap();
        assert_eq!(g.out_neighbors(0), vec![1, 2, 4]);
        assert!(!g.is_symmetric());
        assert!(g.is_weight_balanced());
    }

    #[test]
    fn tiny_graphs_rejected() {
        assert!(matches!(build_graph(TopologyKind::Ring, 1), Err(Error::InvalidSize(_))));
        assert!(matches!(build_graph(TopologyKind::Complete, 0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn metropolis_complete_two() {
        let w = metropolis_weights(&build_graph(TopologyKind::Complete, 2).unwrap()).unwrap();
        assert_eq!(w.dense(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(w.lambda(), 0.0);
    }

    #[test]
    fn metropolis_ring_four() {
        let w = metropolis_weights(&build_graph(TopologyKind::Ring, 4).unwrap()).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(w.get(i, i), 1.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(w.get(i, (i + 1) % 4), 1.0 / 3.0, epsilon = 1e-15);
            assert_eq!(w.get(i, (i + 2) % 4), 0.0);
        }
        assert_abs_diff_eq!(w.lambda(), 1.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn metropolis_ring_eight_matches_reference() {
        let w = metropolis_weights(&build_graph(TopologyKind::Ring, 8).unwrap()).unwrap();
        let oracle = (1.0 + 2.0 * (PI / 4.0).cos()) / 3.0;
        assert_abs_diff_eq!(w.lambda(), oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(w.lambda(), 0.8047, epsilon = 1e-4);
    }

    #[test]
    fn metropolis_rejects_directed_and_disconnected() {
        let g = build_graph(TopologyKind::DirectedExponential, 8).unwrap();
        assert!(matches!(metropolis_weights(&g), Err(Error::UnsupportedGraph(_))));
        let split = Graph::new(4, [(0, 1), (1, 0), (2, 3), (3, 2)], TopologyKind::Custom).unwrap();
        assert!(matches!(metropolis_weights(&split), Err(Error::NonPrimitive { .. })));
    }

    #[test]
    fn uniform_weights_cases() {
        let w = uniform_out_weights(&build_graph(TopologyKind::Complete, 4).unwrap()).unwrap();
        assert!(w.dense().iter().all(|&v| v == 0.25));
        assert!(w.lambda() <= 1e-12);

        let g = build_graph(TopologyKind::DirectedExponential, 8).unwrap();
        let w = uniform_out_weights(&g).unwrap();
        assert_abs_diff_eq!(w.lambda(), 0.5, epsilon = 1e-8);
        assert!(w.support_matches(&g));

        let w = uniform_out_weights(&build_graph(TopologyKind::DirectedExponential, 2).unwrap()).unwrap();
        assert_eq!(w.dense(), &[0.5, 0.5, 0.5, 0.5]);
        assert_eq!(w.lambda(), 0.0);
    }

    #[test]
    fn uniform_rejects_irregular() {
        let g = Graph::new(3, [(0, 1), (1, 0), (1, 2), (2, 1)], TopologyKind::Custom).unwrap();
        assert!(matches!(uniform_out_weights(&g), Err(Error::UnsupportedGraph(_))));
    }

    #[test]
    fn laplacian_cases() {
        let w = laplacian_weights(&build_graph(TopologyKind::Complete, 2).unwrap()).unwrap();
        assert_eq!(w.dense(), &[0.5, 0.5, 0.5, 0.5]);

        let w = laplacian_weights(&build_graph(TopologyKind::Ring, 4).unwrap()).unwrap();
        assert_eq!(w.get(0, 0), 0.5);
        assert_eq!(w.get(0, 1), 0.25);
        assert_eq!(w.get(0, 3), 0.25);
        assert_abs_diff_eq!(w.lambda(), 0.5, epsilon = 1e-9);

        let w = laplacian_weights(&build_graph(TopologyKind::Complete, 5).unwrap()).unwrap();
        assert!(w.lambda() <= 1e-12);

        let g = build_graph(TopologyKind::DirectedExponential, 8).unwrap();
        assert!(matches!(laplacian_weights(&g), Err(Error::UnsupportedGraph(_))));
    }

    #[test]
    fn averaging_matrix_has_zero_gap() {
        for n in [1, 2, 7, 20] {
            assert_eq!(MixingMatrix::averaging(n).unwrap().lambda(), 0.0);
        }
    }

    #[test]
    fn metropolis_ring_twenty() {
        let w = metropolis_weights(&build_graph(TopologyKind::Ring, 20).unwrap()).unwrap();
        let oracle = (1.0 + 2.0 * (2.0 * PI / 20.0).cos()) / 3.0;
        assert_abs_diff_eq!(w.lambda(), oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(w.lambda(), 0.9674, epsilon = 1e-4);
    }

    #[test]
    fn rejects_non_stochastic() {
        assert!(matches!(
            MixingMatrix::from_dense(2, vec![0.6, 0.4, 0.6, 0.4]),
            Err(Error::NotDoublyStochastic(_))
        ));
        assert!(matches!(
            MixingMatrix::from_dense(2, vec![1.5, -0.5, -0.5, 1.5]),
            Err(Error::NotDoublyStochastic(_))
        ));
    }

    #[test]
    fn adjacency_round_trip() {
        let text = "# ring\n1 2\n2 1 # back\n\n2 3\n3 2\n3 1\n1 3\n";
        let g = Graph::parse_adjacency(text, None).unwrap();
        assert_eq!(g.n(), 3);
        assert!(g.is_symmetric());
        let again = Graph::parse_adjacency(&g.to_adjacency(), Some(3)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn adjacency_errors() {
        assert!(matches!(Graph::parse_adjacency("0 1\n", None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Graph::parse_adjacency("1 x\n", None), Err(Error::Parse { .. })));
        assert!(matches!(Graph::parse_adjacency("1 1\n", Some(2)), Err(Error::InvalidInput(_))));
        assert!(matches!(Graph::parse_adjacency("1 3\n", Some(2)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn mixing_averages_on_complete() {
        let w = MixingMatrix::averaging(2).unwrap();
        let out = w.mix(&[vec![1.0, 0.0], vec![3.0, 2.0]]);
        assert_eq!(out, vec![vec![2.0, 1.0], vec![2.0, 1.0]]);
    }
}
