//! Partition quality scores.
//!
//! Weighted Newman modularity on one-mode graphs:
//!
//! ```text
//! Q = Σ_C [ W_C / W − (S_C / 2W)² ]
//! ```
//!
//! with `W` the total edge weight, `W_C` the weight inside `C` (self-loops
//! once) and `S_C` the strength sum of `C`. Barber modularity on bipartite
//! graphs:
//!
//! ```text
//! Q_B = Σ_C [ E_C / m − d_C · g_C / m² ]
//! ```
//!
//! with `E_C` the edges inside `C` and `d_C`, `g_C` the Left and Right
//! degree sums of `C`.
//!
//! Scores are accumulated per community in first-seen order of the nodes,
//! so relabeling communities never changes a score, not even in the last bit.

use crate::error::{Error, Result};
use crate::graph::{renumber, Adjacency, BipartiteGraph, NodeKind, Partition, WeightedGraph};

fn check_len(labels: &[usize], expected: usize) -> Result<()> {
    if labels.len() != expected {
        return Err(Error::Mismatch(format!(
            "partition covers {} nodes, graph has {}",
            labels.len(),
            expected
        )));
    }
    Ok(())
}

pub fn modularity_unipartite(g: &WeightedGraph, labels: &[usize]) -> Result<f64> {
    check_len(labels, g.node_count())?;
    let total = g.total_weight();
    if total <= 0.0 {
        return Err(Error::EmptyGraph(
            "modularity is undefined on a graph without edge weight",
        ));
    }
    let (dense, count) = renumber(labels);
    let mut internal = vec![0.0; count];
    let mut strength = vec![0.0; count];
    for &(u, v, w) in g.edges() {
        if dense[u] == dense[v] {
            internal[dense[u]] += w;
        }
    }
    for (node, &c) in dense.iter().enumerate() {
        strength[c] += g.strength(node);
    }
    let two_w = 2.0 * total;
    Ok(internal
        .iter()
        .zip(&strength)
        .map(|(&w_c, &s_c)| w_c / total - (s_c / two_w) * (s_c / two_w))
        .sum())
}

/// `labels` covers Left nodes then Right nodes.
pub fn modularity_bipartite(g: &BipartiteGraph, labels: &[usize]) -> Result<f64> {
    check_len(labels, g.node_count())?;
    let m = g.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph(
            "Barber modularity is undefined on a graph without edges",
        ));
    }
    let offset = g.left_count();
    let (dense, count) = renumber(labels);
    let mut inside = vec![0u64; count];
    let mut left_sum = vec![0u64; count];
    let mut right_sum = vec![0u64; count];
    for (l, r) in g.edges() {
        if dense[l] == dense[offset + r] {
            inside[dense[l]] += 1;
        }
    }
    for l in 0..offset {
        left_sum[dense[l]] += g.left_degree(l) as u64;
    }
    for r in 0..g.right_count() {
        right_sum[dense[offset + r]] += g.right_degree(r) as u64;
    }
    let m = m as f64;
    let m2 = m * m;
    Ok((0..count)
        .map(|c| inside[c] as f64 / m - (left_sum[c] as f64 * right_sum[c] as f64) / m2)
        .sum())
}

/// Exact change in `Q` when a node of strength `k_i` moves from community
/// `from` to `to`. `k_i_from` is its edge weight into `from` (itself and its
/// self-loop excluded), `k_i_to` its edge weight into `to`.
pub fn gain_unipartite(
    ctx: &UnipartiteAggregates,
    from: usize,
    to: usize,
    k_i: f64,
    k_i_from: f64,
    k_i_to: f64,
) -> f64 {
    if from == to {
        return 0.0;
    }
    let w = ctx.total_weight;
    let s_from_rest = ctx.strength_sum[from] - k_i;
    let s_to = ctx.strength_sum[to];
    (k_i_to - k_i_from) / w - k_i * (s_to - s_from_rest) / (2.0 * w * w)
}

/// Exact change in `Q_B` for a move of a node with degree `k_i`. The null
/// term only sees the opposite side's degree sums: a Left node entering `C`
/// pays `k_i · g_C / m²`.
pub fn gain_bipartite(
    ctx: &BipartiteAggregates,
    kind: NodeKind,
    from: usize,
    to: usize,
    k_i: f64,
    k_i_from: f64,
    k_i_to: f64,
) -> f64 {
    if from == to {
        return 0.0;
    }
    let m = ctx.edge_count;
    let opposite = match kind {
        NodeKind::Left => &ctx.right_degree_sum,
        NodeKind::Right => &ctx.left_degree_sum,
    };
    (k_i_to - k_i_from) / m - k_i * (opposite[to] - opposite[from]) / (m * m)
}

/// Per-community sums for a one-mode graph under a mutable assignment.
#[derive(Debug, Clone)]
pub struct UnipartiteAggregates {
    pub labels: Vec<usize>,
    pub internal_weight: Vec<f64>,
    pub strength_sum: Vec<f64>,
    pub total_weight: f64,
    adjacency: Adjacency,
    strength: Vec<f64>,
}

impl UnipartiteAggregates {
    /// Community ids must be below `g.node_count()`.
    pub fn new(g: &WeightedGraph, labels: &[usize]) -> Result<Self> {
        check_len(labels, g.node_count())?;
        let n = g.node_count();
        if let Some(&bad) = labels.iter().find(|&&c| c >= n) {
            return Err(Error::IndexOutOfRange {
                what: "community",
                index: bad,
                bound: n,
            });
        }
        let mut internal_weight = vec![0.0; n];
        let mut strength_sum = vec![0.0; n];
        for &(u, v, w) in g.edges() {
            if labels[u] == labels[v] {
                internal_weight[labels[u]] += w;
            }
        }
        for (node, &c) in labels.iter().enumerate() {
            strength_sum[c] += g.strength(node);
        }
        Ok(UnipartiteAggregates {
            labels: labels.to_vec(),
            internal_weight,
            strength_sum,
            total_weight: g.total_weight(),
            adjacency: g.adjacency(),
            strength: g.strengths().to_vec(),
        })
    }

    fn weight_into(&self, node: usize, community: usize) -> f64 {
        self.adjacency
            .neighbors(node)
            .filter(|&(j, _)| self.labels[j] == community)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn move_gain(&self, node: usize, to: usize) -> f64 {
        let from = self.labels[node];
        gain_unipartite(
            self,
            from,
            to,
            self.strength[node],
            self.weight_into(node, from),
            self.weight_into(node, to),
        )
    }

    pub fn apply_move(&mut self, node: usize, to: usize) {
        let from = self.labels[node];
        if from == to {
            return;
        }
        let k_from = self.weight_into(node, from);
        let k_to = self.weight_into(node, to);
        let lp = self.adjacency.self_loop(node);
        self.internal_weight[from] -= k_from + lp;
        self.internal_weight[to] += k_to + lp;
        self.strength_sum[from] -= self.strength[node];
        self.strength_sum[to] += self.strength[node];
        self.labels[node] = to;
    }

    pub fn score(&self) -> f64 {
        let w = self.total_weight;
        self.internal_weight
            .iter()
            .zip(&self.strength_sum)
            .map(|(&w_c, &s_c)| w_c / w - (s_c / (2.0 * w)).powi(2))
            .sum()
    }
}

/// Per-community sums for a bipartite graph in the combined index space.
#[derive(Debug, Clone)]
pub struct BipartiteAggregates {
    pub labels: Vec<usize>,
    pub internal_edges: Vec<f64>,
    pub left_degree_sum: Vec<f64>,
    pub right_degree_sum: Vec<f64>,
    pub edge_count: f64,
    graph: BipartiteGraph,
}

impl BipartiteAggregates {
    pub fn new(g: &BipartiteGraph, labels: &[usize]) -> Result<Self> {
        check_len(labels, g.node_count())?;
        let n = g.node_count();
        if let Some(&bad) = labels.iter().find(|&&c| c >= n) {
            return Err(Error::IndexOutOfRange {
                what: "community",
                index: bad,
                bound: n,
            });
        }
        let offset = g.left_count();
        let mut internal_edges = vec![0.0; n];
        let mut left_degree_sum = vec![0.0; n];
        let mut right_degree_sum = vec![0.0; n];
        for (l, r) in g.edges() {
            if labels[l] == labels[offset + r] {
                internal_edges[labels[l]] += 1.0;
            }
        }
        for l in 0..offset {
            left_degree_sum[labels[l]] += g.left_degree(l) as f64;
        }
        for r in 0..g.right_count() {
            right_degree_sum[labels[offset + r]] += g.right_degree(r) as f64;
        }
        Ok(BipartiteAggregates {
            labels: labels.to_vec(),
            internal_edges,
            left_degree_sum,
            right_degree_sum,
            edge_count: g.edge_count() as f64,
            graph: g.clone(),
        })
    }

    fn node_info(&self, node: usize) -> (NodeKind, Vec<usize>) {
        let offset = self.graph.left_count();
        match self.graph.kind_of(node) {
            NodeKind::Left => (
                NodeKind::Left,
                self.graph
                    .left_neighbors(node)
                    .iter()
                    .map(|&r| offset + r)
                    .collect(),
            ),
            NodeKind::Right => (
                NodeKind::Right,
                self.graph.right_neighbors(node - offset).to_vec(),
            ),
        }
    }

    fn edges_into(&self, neighbors: &[usize], community: usize) -> f64 {
        neighbors
            .iter()
            .filter(|&&j| self.labels[j] == community)
            .count() as f64
    }

    pub fn move_gain(&self, node: usize, to: usize) -> f64 {
        let from = self.labels[node];
        let (kind, nbrs) = self.node_info(node);
        gain_bipartite(
            self,
            kind,
            from,
            to,
            nbrs.len() as f64,
            self.edges_into(&nbrs, from),
            self.edges_into(&nbrs, to),
        )
    }

    pub fn apply_move(&mut self, node: usize, to: usize) {
        let from = self.labels[node];
        if from == to {
            return;
        }
        let (kind, nbrs) = self.node_info(node);
        let k = nbrs.len() as f64;
        self.internal_edges[from] -= self.edges_into(&nbrs, from);
        self.internal_edges[to] += self.edges_into(&nbrs, to);
        let sums = match kind {
            NodeKind::Left => &mut self.left_degree_sum,
            NodeKind::Right => &mut self.right_degree_sum,
        };
        sums[from] -= k;
        sums[to] += k;
        self.labels[node] = to;
    }

    pub fn score(&self) -> f64 {
        let m = self.edge_count;
        (0..self.labels.len())
            .map(|c| {
                self.internal_edges[c] / m
                    - self.left_degree_sum[c] * self.right_degree_sum[c] / (m * m)
            })
            .sum()
    }
}

/// Either kind of graph, for code that scores both.
#[derive(Debug, Clone, Copy)]
pub enum GraphRef<'a> {
    Unipartite(&'a WeightedGraph),
    Bipartite(&'a BipartiteGraph),
}

impl GraphRef<'_> {
    pub fn node_count(&self) -> usize {
        match self {
            GraphRef::Unipartite(g) => g.node_count(),
            GraphRef::Bipartite(g) => g.node_count(),
        }
    }

    pub fn modularity(&self, labels: &[usize]) -> Result<f64> {
        match self {
            GraphRef::Unipartite(g) => modularity_unipartite(g, labels),
            GraphRef::Bipartite(g) => modularity_bipartite(g, labels),
        }
    }
}

pub const DEFAULT_ORACLE_CAP: usize = 10;

/// Restricted growth strings of length `n`, in lexicographic order. Each
/// string is one set partition of `0..n`; there are Bell(n) of them.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    current: Vec<usize>,
    prefix_max: Vec<usize>,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize) -> Self {
        SetPartitions {
            current: vec![0; n],
            prefix_max: vec![0; n],
            done: false,
        }
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let n = self.current.len();
        // Rightmost position that may still grow: a[i] <= max(a[0..i]).
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            let bound = self.prefix_max[i - 1];
            if self.current[i] <= bound {
                self.current[i] += 1;
                self.prefix_max[i] = bound.max(self.current[i]);
                for j in i + 1..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Exhaustive modularity maximization. Ties keep the earliest partition in
/// restricted-growth-string order.
pub fn brute_force_best_partition(g: GraphRef<'_>, max_nodes: usize) -> Result<(Partition, f64)> {
    let n = g.node_count();
    if n > max_nodes {
        return Err(Error::TooLarge {
            nodes: n,
            cap: max_nodes,
        });
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for labels in SetPartitions::new(n) {
        let q = g.modularity(&labels)?;
        if best.as_ref().is_none_or(|(_, b)| q > *b) {
            best = Some((labels, q));
        }
    }
    let (labels, q) = best.expect("at least one partition");
    Ok((Partition::new(&labels, q, 0), q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique_edges(nodes: &[usize]) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (a, &u) in nodes.iter().enumerate() {
            for &v in &nodes[a + 1..] {
                out.push((u, v, 1.0));
            }
        }
        out
    }

    fn bridged_triangles() -> WeightedGraph {
        let mut edges = clique_edges(&[0, 1, 2]);
        edges.extend(clique_edges(&[3, 4, 5]));
        edges.push((2, 3, 1.0));
        WeightedGraph::from_edges(6, edges).unwrap()
    }

    #[test]
    fn single_community_is_zero() {
        let g = bridged_triangles();
        let q = modularity_unipartite(&g, &[0; 6]).unwrap();
        assert!(q.abs() < 1e-12);
    }

    #[test]
    fn two_disjoint_cliques_half() {
        let mut edges = clique_edges(&[0, 1, 2, 3]);
        edges.extend(clique_edges(&[4, 5, 6, 7]));
        let g = WeightedGraph::from_edges(8, edges).unwrap();
        let q = modularity_unipartite(&g, &[0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bridged_triangles_five_fourteenths() {
        let g = bridged_triangles();
        let q = modularity_unipartite(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        let (best, q_best) = brute_force_best_partition(GraphRef::Unipartite(&g), 10).unwrap();
        assert!((q_best - 5.0 / 14.0).abs() < 1e-12);
        assert_eq!(best.assignment(), &[0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn empty_graph_is_error() {
        let g = WeightedGraph::from_edges(3, vec![]).unwrap();
        assert!(matches!(
            modularity_unipartite(&g, &[0, 1, 2]),
            Err(Error::EmptyGraph(_))
        ));
        let b = BipartiteGraph::new(2, 2);
        assert!(matches!(
            modularity_bipartite(&b, &[0, 1, 2, 3]),
            Err(Error::EmptyGraph(_))
        ));
    }

    #[test]
    fn length_mismatch_is_error() {
        let g = bridged_triangles();
        assert!(matches!(
            modularity_unipartite(&g, &[0; 5]),
            Err(Error::Mismatch(_))
        ));
    }

    #[test]
    fn barber_fixtures() {
        let two_edges = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 1)]).unwrap();
        assert!(
            modularity_bipartite(&two_edges, &[0, 0, 0, 0])
                .unwrap()
                .abs()
                < 1e-12
        );
        let q = modularity_bipartite(&two_edges, &[0, 1, 0, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-12);

        let mut edges = Vec::new();
        for (l, r) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            edges.push((l, r));
            edges.push((l + 2, r + 2));
        }
        let k22x2 = BipartiteGraph::from_edges(4, 4, edges).unwrap();
        let q = modularity_bipartite(&k22x2, &[0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        let (_, q_best) = brute_force_best_partition(GraphRef::Bipartite(&k22x2), 10).unwrap();
        assert!((q_best - 0.5).abs() < 1e-12);
    }

    #[test]
    fn set_partitions_count_bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(SetPartitions::new(n).count(), b, "n = {n}");
        }
        let three: Vec<_> = SetPartitions::new(3).collect();
        assert_eq!(
            three,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2]
            ]
        );
    }

    #[test]
    fn oracle_disjoint_edges_and_triangle() {
        let pairs = WeightedGraph::from_edges(4, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let (p, q) = brute_force_best_partition(GraphRef::Unipartite(&pairs), 10).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
        assert_eq!(p.assignment(), &[0, 0, 1, 1]);

        let tri = WeightedGraph::from_edges(3, clique_edges(&[0, 1, 2])).unwrap();
        let (p, q) = brute_force_best_partition(GraphRef::Unipartite(&tri), 10).unwrap();
        assert!(q.abs() < 1e-12);
        assert_eq!(p.community_count(), 1);

        // Both the merged pair and the split score 0; the first in order wins.
        let edge = BipartiteGraph::from_edges(1, 1, [(0, 0)]).unwrap();
        let (p, q) = brute_force_best_partition(GraphRef::Bipartite(&edge), 10).unwrap();
        assert!(q.abs() < 1e-12);
        assert_eq!(p.assignment(), &[0, 0]);
        assert!(modularity_bipartite(&edge, &[0, 1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oracle_refuses_large_graphs() {
        let g = WeightedGraph::from_edges(11, vec![(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            brute_force_best_partition(GraphRef::Unipartite(&g), DEFAULT_ORACLE_CAP),
            Err(Error::TooLarge { nodes: 11, cap: 10 })
        ));
    }

    #[test]
    fn no_op_and_reversible_moves() {
        let g = bridged_triangles();
        let mut agg = UnipartiteAggregates::new(&g, &[0, 0, 0, 3, 3, 3]).unwrap();
        assert_eq!(agg.move_gain(2, 0), 0.0);
        let there = agg.move_gain(2, 3);
        agg.apply_move(2, 3);
        let back = agg.move_gain(2, 0);
        assert!((there + back).abs() < 1e-12);

        let b = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 1)]).unwrap();
        let mut agg = BipartiteAggregates::new(&b, &[0, 1, 2, 3]).unwrap();
        assert_eq!(agg.move_gain(0, 0), 0.0);
        let there = agg.move_gain(0, 2);
        agg.apply_move(0, 2);
        let back = agg.move_gain(0, 0);
        assert!((there + back).abs() < 1e-12);
    }

    #[test]
    fn left_node_entering_its_neighborhood() {
        // Left 0 adjacent to Right 0 and 1, both already in community 3.
        let b = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 1)]).unwrap();
        let labels = [0, 1, 3, 3];
        let agg = BipartiteAggregates::new(&b, &labels).unwrap();
        let m = 3.0;
        let g_c = 1.0 + 2.0;
        let expected = 2.0 / m - 2.0 * g_c / (m * m);
        assert!((agg.move_gain(0, 3) - expected).abs() < 1e-12);
        let before = modularity_bipartite(&b, &labels).unwrap();
        let after = modularity_bipartite(&b, &[3, 1, 3, 3]).unwrap();
        assert!((agg.move_gain(0, 3) - (after - before)).abs() < 1e-12);
    }
}
