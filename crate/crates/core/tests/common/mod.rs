//! Random instance generators and dense reference implementations shared by
//! the integration tests. The oracles work from adjacency matrices and never
//! call into the crate's scoring code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use cobridge::{BipartiteGraph, WeightedGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random weighted graph on `n` nodes with at least one edge.
pub fn random_weighted(rng: &mut ChaCha8Rng, n: usize, density: f64, unit: bool) -> WeightedGraph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < density {
                let w = if unit {
                    1.0
                } else {
                    rng.random_range(0.1..3.0)
                };
                edges.push((u, v, w));
            }
        }
    }
    if edges.is_empty() && n >= 2 {
        edges.push((0, 1, 1.0));
    }
    WeightedGraph::from_edges(n, edges).unwrap()
}

/// Random bipartite graph with at least one edge.
pub fn random_bipartite(
    rng: &mut ChaCha8Rng,
    nl: usize,
    nr: usize,
    density: f64,
) -> BipartiteGraph {
    let mut edges = Vec::new();
    for l in 0..nl {
        for r in 0..nr {
            if rng.random::<f64>() < density {
                edges.push((l, r));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 0));
    }
    BipartiteGraph::from_edges(nl, nr, edges).unwrap()
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k.max(1))).collect()
}

/// A bijective relabeling of community ids, with ids spread far apart.
pub fn permute_labels(rng: &mut ChaCha8Rng, labels: &[usize]) -> Vec<usize> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut ids: Vec<usize> = (0..k).map(|i| i * 7 + 3).collect();
    ids.shuffle(rng);
    labels.iter().map(|&c| ids[c]).collect()
}

pub fn dense_adjacency(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for &(u, v, w) in g.edges() {
        a[u][v] += w;
        if u != v {
            a[v][u] += w;
        }
    }
    a
}

/// `Q = 1/(2W) Σ_ij (A_ij − s_i s_j / 2W) δ(c_i, c_j)` over the full matrix.
pub fn textbook_modularity(g: &WeightedGraph, labels: &[usize]) -> f64 {
    let a = dense_adjacency(g);
    let n = a.len();
    let s: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
    let two_w: f64 = s.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - s[i] * s[j] / two_w;
            }
        }
    }
    q / two_w
}

pub fn incidence(g: &BipartiteGraph) -> Vec<Vec<bool>> {
    let mut b = vec![vec![false; g.right_count()]; g.left_count()];
    for (l, r) in g.edges() {
        b[l][r] = true;
    }
    b
}

/// `Q_B = 1/m Σ_{l,r} (B_lr − k_l d_r / m) δ(c_l, c_r)`, labels over the
/// combined index space (Left first).
pub fn textbook_barber(g: &BipartiteGraph, labels: &[usize]) -> f64 {
    let b = incidence(g);
    let nl = g.left_count();
    let m = g.edge_count() as f64;
    let k: Vec<f64> = b
        .iter()
        .map(|row| row.iter().filter(|&&x| x).count() as f64)
        .collect();
    let d: Vec<f64> = (0..g.right_count())
        .map(|r| b.iter().filter(|row| row[r]).count() as f64)
        .collect();
    let mut q = 0.0;
    for l in 0..nl {
        for r in 0..g.right_count() {
            if labels[l] == labels[nl + r] {
                q += f64::from(u8::from(b[l][r])) - k[l] * d[r] / m;
            }
        }
    }
    q / m
}

/// Dense tf-idf cosine similarity between every pair of articles, using
/// `log_fn` for the idf logarithm. Returns the strictly positive pairs.
pub fn dense_cosine(g: &BipartiteGraph, log_fn: fn(f64) -> f64) -> Vec<(usize, usize, f64)> {
    let b = incidence(g);
    let n = g.left_count() as f64;
    let idf: Vec<f64> = (0..g.right_count())
        .map(|r| {
            let df = b.iter().filter(|row| row[r]).count() as f64;
            if df == 0.0 {
                0.0
            } else {
                log_fn(n / df)
            }
        })
        .collect();
    let vecs: Vec<Vec<f64>> = b
        .iter()
        .map(|row| {
            row.iter()
                .zip(&idf)
                .map(|(&x, &w)| if x { w } else { 0.0 })
                .collect()
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = Vec::new();
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            let (ni, nj) = (norm(&vecs[i]), norm(&vecs[j]));
            if ni == 0.0 || nj == 0.0 {
                continue;
            }
            let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
            let c = dot / (ni * nj);
            if c > 0.0 {
                out.push((i, j, c));
            }
        }
    }
    out
}

/// Union of the cliques on each article's concept set.
pub fn clique_union(g: &BipartiteGraph) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    for l in 0..g.left_count() {
        let nb = g.left_neighbors(l);
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                set.insert((a.min(b), a.max(b)));
            }
        }
    }
    set
}
