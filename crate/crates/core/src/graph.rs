//! Communication graphs with doubly stochastic mixing weights.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

pub const DEFAULT_RETRY_CAP: usize = 1000;
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Undirected agent graph plus Metropolis–Hastings weights.
///
/// `edges` holds off-diagonal pairs `(i, j)` with `i < j`; self-loops are
/// implicit in the diagonal of `weights`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_agents: usize,
    edges: Vec<(usize, usize)>,
    weights: DMatrix<f64>,
    // nonzero entries of each row, column index ascending
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from an edge list. Duplicates and orientation are
    /// normalized; self-loops, out-of-range indices and disconnected edge
    /// sets are rejected.
    pub fn from_edges(n_agents: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::InvalidGraph("n_agents must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a >= n_agents || b >= n_agents {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for {n_agents} agents"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on agent {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        if !is_connected(n_agents, &edges) {
            return Err(Error::InvalidGraph("edge set is not connected".into()));
        }
        let weights = metropolis_weights(&edges, n_agents);
        let rows = (0..n_agents)
            .map(|i| {
                (0..n_agents)
                    .filter(|&j| weights[(i, j)] != 0.0)
                    .map(|j| (j, weights[(i, j)]))
                    .collect()
            })
            .collect();
        Ok(Self {
            n_agents,
            edges,
            weights,
            rows,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Nonzero weights `(j, a_ij)` of row `i`, including `j = i`.
    pub fn mixing_row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    /// Graph with agents relabeled: new agent `k` is old agent `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_agents {
            return Err(Error::DimensionMismatch {
                expected: self.n_agents,
                got: perm.len(),
            });
        }
        let mut inverse = vec![usize::MAX; self.n_agents];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.n_agents || inverse[old] != usize::MAX {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
            inverse[old] = new;
        }
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|&(a, b)| (inverse[a], inverse[b]))
            .collect();
        Self::from_edges(self.n_agents, &edges)
    }

    /// Second-largest singular value of the weight matrix.
    pub fn second_singular_value(&self) -> f64 {
        if self.n_agents == 1 {
            return 0.0;
        }
        let mut sv: Vec<f64> = self
            .weights
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv[1]
    }

    /// Plain-text adjacency list: header `"<n_agents> <n_edges>"`, then one
    /// `"i j"` line per edge.
    pub fn to_adjacency_text(&self) -> String {
        let mut out = format!("{} {}\n", self.n_agents, self.edges.len());
        for (a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// Parses the adjacency-list format; weights are recomputed. Blank lines
    /// and `#` comments are ignored.
    pub fn from_adjacency_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header line".into()))?;
        let (n_agents, n_edges) = parse_pair(header)?;
        let edges = lines.map(parse_pair).collect::<Result<Vec<_>>>()?;
        if edges.len() != n_edges {
            return Err(Error::Parse(format!(
                "header declares {n_edges} edges, found {}",
                edges.len()
            )));
        }
        Self::from_edges(n_agents, &edges)
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(|tok| {
        tok.parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad integer {tok:?}")))
    });
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a?, b?)),
        _ => Err(Error::Parse(format!("expected two integers, got {line:?}"))),
    }
}

/// Erdős–Rényi G(n, p) graph, resampled with seed `seed + k` on attempt `k`
/// until connected.
pub fn erdos_renyi_connected(n_agents: usize, edge_prob: f64, seed: u64) -> Result<WeightedGraph> {
    erdos_renyi_connected_with_cap(n_agents, edge_prob, seed, DEFAULT_RETRY_CAP)
}

pub fn erdos_renyi_connected_with_cap(
    n_agents: usize,
    edge_prob: f64,
    seed: u64,
    retry_cap: usize,
) -> Result<WeightedGraph> {
    if !(edge_prob > 0.0 && edge_prob <= 1.0) {
        return Err(Error::InvalidProbability(edge_prob));
    }
    if n_agents == 0 {
        return Err(Error::InvalidGraph("n_agents must be positive".into()));
    }
    for attempt in 0..retry_cap {
        let mut rng = rng::stream(seed.wrapping_add(attempt as u64), Stream::Graph);
        let mut edges = Vec::new();
        for i in 0..n_agents {
            for j in (i + 1)..n_agents {
                if rng.random::<f64>() < edge_prob {
                    edges.push((i, j));
                }
            }
        }
        if is_connected(n_agents, &edges) {
            return WeightedGraph::from_edges(n_agents, &edges);
        }
    }
    Err(Error::ConnectivityTimeout {
        attempts: retry_cap,
    })
}

/// Metropolis–Hastings weights: `a_ij = 1 / (1 + max(deg_i, deg_j))` on
/// edges, remaining mass on the diagonal.
pub fn metropolis_weights(edges: &[(usize, usize)], n_agents: usize) -> DMatrix<f64> {
    let mut degree = vec![0usize; n_agents];
    for &(a, b) in edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let mut w = DMatrix::zeros(n_agents, n_agents);
    for &(a, b) in edges {
        let v = 1.0 / (1 + degree[a].max(degree[b])) as f64;
        w[(a, b)] = v;
        w[(b, a)] = v;
    }
    for i in 0..n_agents {
        let off: f64 = (0..n_agents).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    w
}

/// True iff the matrix is square, entrywise `>= -tol`, and every row and
/// column sums to 1 within `tol`.
pub fn validate_doubly_stochastic(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    if m.iter().any(|&x| x.is_nan() || x < -tol) {
        return false;
    }
    let rows_ok = m.row_iter().all(|r| (r.sum() - 1.0).abs() <= tol);
    let cols_ok = m.column_iter().all(|c| (c.sum() - 1.0).abs() <= tol);
    rows_ok && cols_ok
}

/// Breadth-first connectivity check.
pub fn is_connected(n_agents: usize, edges: &[(usize, usize)]) -> bool {
    if n_agents <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n_agents];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n_agents];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
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
    count == n_agents
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn single_agent() {
        let g = erdos_renyi_connected(1, 0.5, 123).unwrap();
        assert_eq!(g.weights(), &DMatrix::from_element(1, 1, 1.0));
        assert!(g.edges().is_empty());
        assert_eq!(metropolis_weights(&[], 1), DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn two_agents_full_probability() {
        let g = erdos_renyi_connected(2, 1.0, 9).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        assert_eq!(g.weights(), &DMatrix::from_element(2, 2, 0.5));
    }

    #[test]
    fn zero_probability_rejected() {
        assert_eq!(
            erdos_renyi_connected(5, 0.0, 1),
            Err(Error::InvalidProbability(0.0))
        );
        assert!(matches!(
            erdos_renyi_connected(5, 1.5, 1),
            Err(Error::InvalidProbability(_))
        ));
        assert!(matches!(
            erdos_renyi_connected(5, f64::NAN, 1),
            Err(Error::InvalidProbability(_))
        ));
    }

    #[test]
    fn retry_cap_exhausted() {
        // 40 agents at p = 0.001 are essentially never connected
        assert_eq!(
            erdos_renyi_connected_with_cap(40, 0.001, 0, 5),
            Err(Error::ConnectivityTimeout { attempts: 5 })
        );
    }

    #[test]
    fn complete_graph_on_three() {
        let w = metropolis_weights(&[(0, 1), (0, 2), (1, 2)], 3);
        for v in w.iter() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn star_on_three() {
        let w = metropolis_weights(&[(0, 1), (0, 2)], 3);
        assert_abs_diff_eq!(w[(0, 1)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(0, 2)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(1, 1)], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(2, 2)], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(w[(1, 2)], 0.0);
    }

    #[test]
    fn doubly_stochastic_validation() {
        assert!(validate_doubly_stochastic(&DMatrix::identity(4, 4), 1e-12));
        let m = DMatrix::from_row_slice(2, 2, &[0.6, 0.4, 0.5, 0.5]);
        assert!(!validate_doubly_stochastic(&m, 1e-12));
        let neg = DMatrix::from_row_slice(2, 2, &[1.1, -0.1, -0.1, 1.1]);
        assert!(!validate_doubly_stochastic(&neg, 1e-12));
        assert!(!validate_doubly_stochastic(
            &DMatrix::from_element(2, 3, 0.5),
            1e-12
        ));
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(WeightedGraph::from_edges(3, &[(0, 1)]).is_err());
        assert!(WeightedGraph::from_edges(2, &[(0, 0), (0, 1)]).is_err());
        assert!(WeightedGraph::from_edges(2, &[(0, 2)]).is_err());
        assert!(WeightedGraph::from_edges(0, &[]).is_err());
        let g = WeightedGraph::from_edges(3, &[(1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn adjacency_text_roundtrip() {
        let g = erdos_renyi_connected(12, 0.3, 5).unwrap();
        let text = g.to_adjacency_text();
        assert!(text.starts_with(&format!("12 {}\n", g.edges().len())));
        let back = WeightedGraph::from_adjacency_text(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn adjacency_text_errors() {
        assert!(WeightedGraph::from_adjacency_text("").is_err());
        assert!(WeightedGraph::from_adjacency_text("3 2\n0 1\n").is_err());
        assert!(WeightedGraph::from_adjacency_text("3 2\n0 1\n1 x\n").is_err());
        let ok = WeightedGraph::from_adjacency_text("# path\n3 2\n0 1\n\n1 2 # tail\n").unwrap();
        assert_eq!(ok.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn permuted_relabels_edges() {
        let g = WeightedGraph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let p = g.permuted(&[1, 0, 2]).unwrap();
        // old center 0 is now agent 1
        assert_eq!(p.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(p.weights()[(1, 1)], g.weights()[(0, 0)]);
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn generated_graphs_satisfy_invariants(n in 1usize..25, p in 0.2f64..=1.0, seed in any::<u64>()) {
            let g = erdos_renyi_connected(n, p, seed).unwrap();
            prop_assert!(validate_doubly_stochastic(g.weights(), STOCHASTIC_TOL));
            prop_assert!(is_connected(n, g.edges()));
            let w = g.weights();
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(w[(i, j)], w[(j, i)]);
                    if i != j && w[(i, j)] > 0.0 {
                        prop_assert!(g.edges().contains(&(i.min(j), i.max(j))));
                    }
                }
            }
            if n > 1 {
                prop_assert!(g.second_singular_value() < 1.0 - 1e-10);
            }
        }
    }
}
