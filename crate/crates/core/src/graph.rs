//! Graph containers shared by every stage.
//!
//! Node ids are dense `usize` indices assigned at ingest. A bipartite graph
//! numbers its two sides independently; whenever both sides share one index
//! space (partitions of the bipartite graph, the exhaustive oracle) Left
//! nodes come first: Left `i` is `i`, Right `j` is `left_count + j`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Article-type nodes.
    Left,
    /// Concept-type nodes.
    Right,
}

impl NodeKind {
    pub fn opposite(self) -> Self {
        match self {
            NodeKind::Left => NodeKind::Right,
            NodeKind::Right => NodeKind::Left,
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Left => f.write_str("left"),
            NodeKind::Right => f.write_str("right"),
        }
    }
}

/// Per-node annotations carried alongside the dense graph index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub external_id: String,
    pub kind: NodeKind,
    /// Subject class for Left nodes. Right nodes may carry one for
    /// evaluation against a ground truth; it is never used for inference.
    pub category: Option<String>,
    /// Domain-wide concept flag (Right nodes only).
    pub generic: bool,
}

impl NodeMeta {
    pub fn new(external_id: impl Into<String>, kind: NodeKind) -> Self {
        NodeMeta {
            external_id: external_id.into(),
            kind,
            category: None,
            generic: false,
        }
    }

    pub fn with_category(mut self, category: impl Into<String>) -> Self {
        self.category = Some(category.into());
        self
    }

    pub fn with_generic(mut self, generic: bool) -> Self {
        self.generic = generic;
        self
    }
}

/// Unweighted two-mode graph with sorted adjacency on both sides.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BipartiteGraph {
    left: Vec<Vec<usize>>,
    right: Vec<Vec<usize>>,
    edge_count: usize,
}

impl BipartiteGraph {
    pub fn new(left_count: usize, right_count: usize) -> Self {
        BipartiteGraph {
            left: vec![Vec::new(); left_count],
            right: vec![Vec::new(); right_count],
            edge_count: 0,
        }
    }

    /// Builds a graph from `(left, right)` pairs, ignoring repeated pairs.
    pub fn from_edges(
        left_count: usize,
        right_count: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut g = BipartiteGraph::new(left_count, right_count);
        for (l, r) in edges {
            g.add_edge(l, r)?;
        }
        Ok(g)
    }

    /// Inserts the edge `left`-`right`. Returns `Ok(false)` when the edge was
    /// already present, in which case the graph is unchanged.
    pub fn add_edge(&mut self, left: usize, right: usize) -> Result<bool> {
        if left >= self.left.len() {
            return Err(Error::IndexOutOfRange {
                what: "left node",
                index: left,
                bound: self.left.len(),
            });
        }
        if right >= self.right.len() {
            return Err(Error::IndexOutOfRange {
                what: "right node",
                index: right,
                bound: self.right.len(),
            });
        }
        let row = &mut self.left[left];
        match row.binary_search(&right) {
            Ok(_) => Ok(false),
            Err(pos) => {
                row.insert(pos, right);
                let col = &mut self.right[right];
                let pos = col.binary_search(&left).unwrap_err();
                col.insert(pos, left);
                self.edge_count += 1;
                Ok(true)
            }
        }
    }

    pub fn left_count(&self) -> usize {
        self.left.len()
    }

    pub fn right_count(&self) -> usize {
        self.right.len()
    }

    /// Left plus Right node count.
    pub fn node_count(&self) -> usize {
        self.left.len() + self.right.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn left_neighbors(&self, left: usize) -> &[usize] {
        &self.left[left]
    }

    pub fn right_neighbors(&self, right: usize) -> &[usize] {
        &self.right[right]
    }

    pub fn left_degree(&self, left: usize) -> usize {
        self.left[left].len()
    }

    pub fn right_degree(&self, right: usize) -> usize {
        self.right[right].len()
    }

    pub fn degree_sequences(&self) -> (Vec<usize>, Vec<usize>) {
        (
            self.left.iter().map(Vec::len).collect(),
            self.right.iter().map(Vec::len).collect(),
        )
    }

    /// Edges in `(left, right)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.left
            .iter()
            .enumerate()
            .flat_map(|(l, row)| row.iter().map(move |&r| (l, r)))
    }

    /// Kind of a node in the combined index space.
    pub fn kind_of(&self, node: usize) -> NodeKind {
        if node < self.left.len() {
            NodeKind::Left
        } else {
            NodeKind::Right
        }
    }
}

/// Undirected weighted graph; every edge is stored once with `u <= v`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<(usize, usize, f64)>,
    strength: Vec<f64>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Builds a graph without self-loops. Endpoint order is normalized,
    /// edges are sorted, weights must be finite and strictly positive.
    pub fn from_edges(node_count: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(u, _, _)) = edges.iter().find(|e| e.0 == e.1) {
            return Err(Error::SelfLoop(u));
        }
        Self::from_edges_with_loops(node_count, edges)
    }

    /// Like [`WeightedGraph::from_edges`] but admits self-loops, as found in
    /// aggregated graphs. A loop of weight `w` adds `w` to the total weight
    /// and `2w` to its node's strength.
    pub fn from_edges_with_loops(
        node_count: usize,
        mut edges: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        for e in edges.iter_mut() {
            let (u, v, w) = *e;
            let hi = u.max(v);
            if hi >= node_count {
                return Err(Error::IndexOutOfRange {
                    what: "node",
                    index: hi,
                    bound: node_count,
                });
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidWeight { u, v, weight: w });
            }
            *e = (u.min(v), hi, w);
        }
        edges.sort_by_key(|e| (e.0, e.1));
        if let Some(pair) = edges
            .windows(2)
            .find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1))
        {
            return Err(Error::DuplicateEdge {
                u: pair[0].0,
                v: pair[0].1,
            });
        }
        Ok(Self::from_sorted_unchecked(node_count, edges))
    }

    /// `edges` must already be sorted, deduplicated and normalized.
    pub(crate) fn from_sorted_unchecked(
        node_count: usize,
        edges: Vec<(usize, usize, f64)>,
    ) -> Self {
        let mut strength = vec![0.0; node_count];
        let mut total_weight = 0.0;
        for &(u, v, w) in &edges {
            strength[u] += w;
            strength[v] += w;
            total_weight += w;
        }
        WeightedGraph {
            node_count,
            edges,
            strength,
            total_weight,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn strength(&self, node: usize) -> f64 {
        self.strength[node]
    }

    pub fn strengths(&self) -> &[f64] {
        &self.strength
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Compressed adjacency, both directions, self-loops excluded.
    pub fn adjacency(&self) -> Adjacency {
        let n = self.node_count;
        let mut offsets = vec![0usize; n + 1];
        let mut self_loops = vec![0.0; n];
        for &(u, v, w) in &self.edges {
            if u == v {
                self_loops[u] += w;
            } else {
                offsets[u + 1] += 1;
                offsets[v + 1] += 1;
            }
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let total = offsets[n];
        let mut targets = vec![0u32; total];
        let mut weights = vec![0.0; total];
        // Lower neighbors first, then upper ones: with edges sorted by (u, v)
        // every row comes out sorted.
        for &(u, v, w) in &self.edges {
            if u != v {
                targets[fill[v]] = u as u32;
                weights[fill[v]] = w;
                fill[v] += 1;
            }
        }
        for &(u, v, w) in &self.edges {
            if u != v {
                targets[fill[u]] = v as u32;
                weights[fill[u]] = w;
                fill[u] += 1;
            }
        }
        Adjacency {
            offsets,
            targets,
            weights,
            self_loops,
        }
    }
}

/// CSR view of a [`WeightedGraph`].
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub(crate) offsets: Vec<usize>,
    pub(crate) targets: Vec<u32>,
    pub(crate) weights: Vec<f64>,
    pub(crate) self_loops: Vec<f64>,
}

impl Adjacency {
    pub fn node_count(&self) -> usize {
        self.self_loops.len()
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let row = self.offsets[node]..self.offsets[node + 1];
        self.targets[row.clone()]
            .iter()
            .zip(&self.weights[row])
            .map(|(&t, &w)| (t as usize, w))
    }

    pub fn self_loop(&self, node: usize) -> f64 {
        self.self_loops[node]
    }
}

/// Community assignment with the modularity it attains on its source graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
    score: f64,
    seed: u64,
}

impl Partition {
    /// Renumbers `labels` densely in first-seen order.
    pub fn new(labels: &[usize], score: f64, seed: u64) -> Self {
        let (assignment, community_count) = renumber(labels);
        Partition {
            assignment,
            community_count,
            score,
            seed,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    /// Members of each community in ascending node order.
    pub fn communities(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Dense first-seen relabeling. Returns the new labels and their count.
pub fn renumber(labels: &[usize]) -> (Vec<usize>, usize) {
    let bound = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut map = vec![usize::MAX; bound];
    let mut next = 0;
    let out = labels
        .iter()
        .map(|&l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect();
    (out, next)
}
