//! Seeded Louvain optimization for Newman and Barber modularity.
//!
//! Both objectives share one engine. Every level is a weighted graph whose
//! nodes carry two null-model attributes `(a, b)`; a community's score is
//!
//! ```text
//! W_C / W − λ · A_C · B_C
//! ```
//!
//! For Newman modularity `a = b = strength` and `λ = 1 / 4W²`. For Barber
//! modularity `a` is the Left degree sum, `b` the Right degree sum and
//! `λ = 1 / m²`. Aggregating a community into a meta-node sums `a` and `b`
//! separately, which keeps the bipartite null model exact even after
//! communities mix both node kinds.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{renumber, BipartiteGraph, Partition, WeightedGraph};
use crate::modularity::{modularity_bipartite, modularity_unipartite};

/// Name of the per-run generator, recorded in run summaries and manifests.
pub const RNG_NAME: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9)";

pub const DEFAULT_UNIPARTITE_RUNS: usize = 100;
pub const DEFAULT_BIPARTITE_RUNS: usize = 1000;
pub const DEFAULT_MIN_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveRule {
    /// Move to the neighboring community with the largest positive gain;
    /// equal gains go to the lowest community id.
    BestGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub runs: usize,
    pub base_seed: u64,
    pub min_gain: f64,
    pub max_levels: Option<usize>,
    pub move_rule: MoveRule,
}

impl OptimizerConfig {
    pub fn unipartite() -> Self {
        OptimizerConfig {
            runs: DEFAULT_UNIPARTITE_RUNS,
            ..Self::bipartite()
        }
    }

    pub fn bipartite() -> Self {
        OptimizerConfig {
            runs: DEFAULT_BIPARTITE_RUNS,
            base_seed: 0,
            min_gain: DEFAULT_MIN_GAIN,
            max_levels: None,
            move_rule: MoveRule::BestGain,
        }
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_seed(mut self, base_seed: u64) -> Self {
        self.base_seed = base_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if !(self.min_gain > 0.0 && self.min_gain.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "min_gain must be positive, got {}",
                self.min_gain
            )));
        }
        if self.max_levels == Some(0) {
            return Err(Error::InvalidConfig("max_levels must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub partition: Partition,
    /// Modularity after the local-move phase of each level.
    pub score_trace: Vec<f64>,
    /// Modularity after every local-move pass, all levels concatenated.
    pub pass_trace: Vec<f64>,
    /// Assignment of original nodes to level communities, one per level.
    pub level_assignments: Vec<Vec<usize>>,
    pub level_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub score: f64,
    pub levels: usize,
    pub communities: usize,
    pub wall_time_ms: f64,
}

/// Graphs the optimizer understands.
pub trait Optimizable: Sync {
    fn louvain(&self, seed: u64, config: &OptimizerConfig) -> Result<RunResult>;
}

impl Optimizable for WeightedGraph {
    fn louvain(&self, seed: u64, config: &OptimizerConfig) -> Result<RunResult> {
        louvain_unipartite_with(self, seed, config)
    }
}

impl Optimizable for BipartiteGraph {
    fn louvain(&self, seed: u64, config: &OptimizerConfig) -> Result<RunResult> {
        louvain_bipartite_with(self, seed, config)
    }
}

pub fn louvain_unipartite(g: &WeightedGraph, seed: u64) -> Result<RunResult> {
    louvain_unipartite_with(g, seed, &OptimizerConfig::unipartite())
}

pub fn louvain_bipartite(g: &BipartiteGraph, seed: u64) -> Result<RunResult> {
    louvain_bipartite_with(g, seed, &OptimizerConfig::bipartite())
}

pub fn louvain_unipartite_with(
    g: &WeightedGraph,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<RunResult> {
    config.validate()?;
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph("Louvain needs at least one edge"));
    }
    let level = Level::from_weighted(g);
    let mut result = optimize(level, seed, config);
    let score = modularity_unipartite(g, result.partition.assignment())?;
    result.partition = Partition::new(result.partition.assignment(), score, seed);
    Ok(result)
}

pub fn louvain_bipartite_with(
    g: &BipartiteGraph,
    seed: u64,
    config: &OptimizerConfig,
) -> Result<RunResult> {
    config.validate()?;
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph("Louvain needs at least one edge"));
    }
    let level = Level::from_bipartite(g);
    let mut result = optimize(level, seed, config);
    let score = modularity_bipartite(g, result.partition.assignment())?;
    result.partition = Partition::new(result.partition.assignment(), score, seed);
    Ok(result)
}

/// Runs `config.runs` seeds `base_seed + i` on the current rayon pool and
/// returns the best partition (highest score, then lowest seed) with one
/// summary per run in seed order.
pub fn multi_run<G: Optimizable>(
    g: &G,
    config: &OptimizerConfig,
) -> Result<(Partition, Vec<RunSummary>)> {
    config.validate()?;
    let summaries = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = config.base_seed.wrapping_add(i);
            let start = Instant::now();
            let run = g.louvain(seed, config)?;
            Ok(RunSummary {
                seed,
                score: run.partition.score(),
                levels: run.level_count,
                communities: run.partition.community_count(),
                wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = summaries
        .iter()
        .copied()
        .reduce(|a, b| if b.score > a.score { b } else { a })
        .expect("runs >= 1");
    // Runs are pure functions of the seed, so only the winner is kept and
    // recomputed instead of holding every partition in memory.
    let run = g.louvain(best.seed, config)?;
    Ok((run.partition, summaries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Unipartite,
    Bipartite,
}

impl GraphKind {
    /// Smallest community size that survives filtering.
    pub fn min_cluster_size(self) -> usize {
        match self {
            GraphKind::Unipartite => 2,
            GraphKind::Bipartite => 3,
        }
    }
}

/// A partition after the size floor: surviving communities renumbered
/// densely (in order of their original id), everything else unclustered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredPartition {
    /// Surviving cluster per node, `None` for the unclustered bucket.
    pub labels: Vec<Option<usize>>,
    pub cluster_count: usize,
    /// Original community id of each surviving cluster.
    pub source_ids: Vec<usize>,
    /// Original community ids that were dropped.
    pub dropped_communities: Vec<usize>,
    /// Nodes in dropped communities, ascending.
    pub dropped_nodes: Vec<usize>,
}

impl FilteredPartition {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count];
        for c in self.labels.iter().flatten() {
            sizes[*c] += 1;
        }
        sizes
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }
}

pub fn filter_clusters(p: &Partition, kind: GraphKind) -> FilteredPartition {
    let floor = kind.min_cluster_size();
    let sizes = p.sizes();
    let mut remap = vec![None; sizes.len()];
    let mut source_ids = Vec::new();
    let mut dropped_communities = Vec::new();
    for (c, &size) in sizes.iter().enumerate() {
        if size >= floor {
            remap[c] = Some(source_ids.len());
            source_ids.push(c);
        } else {
            dropped_communities.push(c);
        }
    }
    let labels: Vec<Option<usize>> = p.assignment().iter().map(|&c| remap[c]).collect();
    let dropped_nodes = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_none())
        .map(|(i, _)| i)
        .collect();
    FilteredPartition {
        labels,
        cluster_count: source_ids.len(),
        source_ids,
        dropped_communities,
        dropped_nodes,
    }
}

/// One coarsening level in CSR form. Self-loops live in `self_loop`.
#[derive(Debug, Clone)]
struct Level {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    self_loop: Vec<f64>,
    attr_a: Vec<f64>,
    attr_b: Vec<f64>,
    total_weight: f64,
    lambda: f64,
}

impl Level {
    fn from_weighted(g: &WeightedGraph) -> Self {
        let adj = g.adjacency();
        let w = g.total_weight();
        Level {
            offsets: adj.offsets,
            targets: adj.targets,
            weights: adj.weights,
            self_loop: adj.self_loops,
            attr_a: g.strengths().to_vec(),
            attr_b: g.strengths().to_vec(),
            total_weight: w,
            lambda: 1.0 / (4.0 * w * w),
        }
    }

    fn from_bipartite(g: &BipartiteGraph) -> Self {
        let n_left = g.left_count();
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * g.edge_count());
        offsets.push(0);
        let mut attr_a = vec![0.0; n];
        let mut attr_b = vec![0.0; n];
        for (l, a) in attr_a.iter_mut().enumerate().take(n_left) {
            targets.extend(g.left_neighbors(l).iter().map(|&r| (n_left + r) as u32));
            offsets.push(targets.len());
            *a = g.left_degree(l) as f64;
        }
        for r in 0..g.right_count() {
            targets.extend(g.right_neighbors(r).iter().map(|&l| l as u32));
            offsets.push(targets.len());
            attr_b[n_left + r] = g.right_degree(r) as f64;
        }
        let m = g.edge_count() as f64;
        Level {
            offsets,
            weights: vec![1.0; targets.len()],
            targets,
            self_loop: vec![0.0; n],
            attr_a,
            attr_b,
            total_weight: m,
            lambda: 1.0 / (m * m),
        }
    }

    fn node_count(&self) -> usize {
        self.self_loop.len()
    }

    fn row(&self, node: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[node]..self.offsets[node + 1];
        (&self.targets[r.clone()], &self.weights[r])
    }

    fn score(&self, comm: &[usize], agg_a: &[f64], agg_b: &[f64]) -> f64 {
        let n = self.node_count();
        let mut internal = vec![0.0; n];
        for i in 0..n {
            let c = comm[i];
            let mut w_in = self.self_loop[i];
            let (targets, weights) = self.row(i);
            for (&j, &w) in targets.iter().zip(weights) {
                let j = j as usize;
                if j > i && comm[j] == c {
                    w_in += w;
                }
            }
            internal[c] += w_in;
        }
        (0..n)
            .map(|c| internal[c] / self.total_weight - self.lambda * agg_a[c] * agg_b[c])
            .sum()
    }

    /// Collapses each community of the dense labelling `comm` into one node.
    fn aggregate(&self, comm: &[usize], count: usize) -> Level {
        let n = self.node_count();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
        for (i, &c) in comm.iter().enumerate() {
            members[c].push(i);
        }
        let mut self_loop = vec![0.0; count];
        let mut attr_a = vec![0.0; count];
        let mut attr_b = vec![0.0; count];
        let mut upper: Vec<(u32, u32, f64)> = Vec::new();
        let mut acc = vec![0.0; count];
        let mut touched: Vec<usize> = Vec::new();
        for (c, nodes) in members.iter().enumerate() {
            for &i in nodes {
                attr_a[c] += self.attr_a[i];
                attr_b[c] += self.attr_b[i];
                self_loop[c] += self.self_loop[i];
                let (targets, weights) = self.row(i);
                for (&j, &w) in targets.iter().zip(weights) {
                    let cj = comm[j as usize];
                    if cj == c {
                        if (j as usize) > i {
                            self_loop[c] += w;
                        }
                    } else if cj > c {
                        if acc[cj] == 0.0 {
                            touched.push(cj);
                        }
                        acc[cj] += w;
                    }
                }
            }
            touched.sort_unstable();
            for &cj in &touched {
                upper.push((c as u32, cj as u32, acc[cj]));
                acc[cj] = 0.0;
            }
            touched.clear();
        }
        debug_assert!(n >= count);
        let mut degree = vec![0usize; count + 1];
        for &(u, v, _) in &upper {
            degree[u as usize + 1] += 1;
            degree[v as usize + 1] += 1;
        }
        for i in 0..count {
            degree[i + 1] += degree[i];
        }
        let offsets = degree;
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[count]];
        let mut weights = vec![0.0; offsets[count]];
        // `upper` is sorted by (u, v); lower neighbors land first, in order.
        for &(u, v, w) in &upper {
            let (u, v) = (u as usize, v as usize);
            targets[fill[v]] = u as u32;
            weights[fill[v]] = w;
            fill[v] += 1;
        }
        for &(u, v, w) in &upper {
            let u = u as usize;
            targets[fill[u]] = v;
            weights[fill[u]] = w;
            fill[u] += 1;
        }
        Level {
            offsets,
            targets,
            weights,
            self_loop,
            attr_a,
            attr_b,
            total_weight: self.total_weight,
            lambda: self.lambda,
        }
    }
}

struct LocalMoves {
    comm: Vec<usize>,
    agg_a: Vec<f64>,
    agg_b: Vec<f64>,
    pass_scores: Vec<f64>,
    moved: bool,
}

fn local_moves(level: &Level, rng: &mut ChaCha8Rng, min_gain: f64) -> LocalMoves {
    let n = level.node_count();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut agg_a = level.attr_a.clone();
    let mut agg_b = level.attr_b.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let inv_w = 1.0 / level.total_weight;
    let lambda = level.lambda;
    let mut acc = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut pass_scores = Vec::new();
    let mut moved_any = false;

    loop {
        let mut pass_gain = 0.0;
        let mut moved = false;
        for &i in &order {
            let own = comm[i];
            let (targets, weights) = level.row(i);
            for (&j, &w) in targets.iter().zip(weights) {
                let c = comm[j as usize];
                if acc[c] == 0.0 {
                    touched.push(c);
                }
                acc[c] += w;
            }
            let (a_i, b_i) = (level.attr_a[i], level.attr_b[i]);
            agg_a[own] -= a_i;
            agg_b[own] -= b_i;

            let stay = acc[own] * inv_w - lambda * (a_i * agg_b[own] + b_i * agg_a[own]);
            let mut best = own;
            let mut best_gain = stay;
            for &c in &touched {
                if c == own {
                    continue;
                }
                let gain = acc[c] * inv_w - lambda * (a_i * agg_b[c] + b_i * agg_a[c]);
                if gain > best_gain || (gain == best_gain && best != own && c < best) {
                    best = c;
                    best_gain = gain;
                }
            }
            agg_a[best] += a_i;
            agg_b[best] += b_i;
            if best != own {
                comm[i] = best;
                pass_gain += best_gain - stay;
                moved = true;
            }
            for &c in &touched {
                acc[c] = 0.0;
            }
            touched.clear();
        }
        pass_scores.push(level.score(&comm, &agg_a, &agg_b));
        moved_any |= moved;
        if !moved || pass_gain < min_gain {
            break;
        }
    }
    LocalMoves {
        comm,
        agg_a,
        agg_b,
        pass_scores,
        moved: moved_any,
    }
}

fn optimize(mut level: Level, seed: u64, config: &OptimizerConfig) -> RunResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let original_n = level.node_count();
    let mut mapping: Vec<usize> = (0..original_n).collect();
    let mut score_trace = Vec::new();
    let mut pass_trace = Vec::new();
    let mut level_assignments = Vec::new();

    loop {
        let moves = local_moves(&level, &mut rng, config.min_gain);
        pass_trace.extend_from_slice(&moves.pass_scores);
        let (dense, count) = renumber(&moves.comm);
        if !moves.moved || count == level.node_count() {
            if score_trace.is_empty() {
                score_trace.push(level.score(&moves.comm, &moves.agg_a, &moves.agg_b));
            }
            break;
        }
        score_trace.push(*moves.pass_scores.last().expect("at least one pass"));
        for m in mapping.iter_mut() {
            *m = dense[*m];
        }
        level_assignments.push(mapping.clone());
        if config
            .max_levels
            .is_some_and(|cap| level_assignments.len() >= cap)
        {
            break;
        }
        level = level.aggregate(&dense, count);
    }

    let level_count = score_trace.len();
    RunResult {
        partition: Partition::new(&mapping, f64::NAN, seed),
        score_trace,
        pass_trace,
        level_assignments,
        level_count,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangles(k: usize, bridges: &[(usize, usize)]) -> WeightedGraph {
        let mut edges = Vec::new();
        for t in 0..k {
            let b = 3 * t;
            edges.extend([(b, b + 1, 1.0), (b, b + 2, 1.0), (b + 1, b + 2, 1.0)]);
        }
        edges.extend(bridges.iter().map(|&(u, v)| (u, v, 1.0)));
        WeightedGraph::from_edges(3 * k, edges).unwrap()
    }

    #[test]
    fn bridged_triangles_recover_cliques() {
        let g = triangles(2, &[(2, 3)]);
        for seed in 0..10 {
            let run = louvain_unipartite(&g, seed).unwrap();
            assert!(
                (run.partition.score() - 5.0 / 14.0).abs() < 1e-12,
                "seed {seed}"
            );
            let a = run.partition.assignment();
            assert!(a[0] == a[1] && a[1] == a[2] && a[3] == a[4] && a[4] == a[5]);
            assert_ne!(a[0], a[3]);
        }
    }

    #[test]
    fn four_triangles_split_by_component() {
        let g = triangles(4, &[]);
        let run = louvain_unipartite(&g, 3).unwrap();
        assert_eq!(run.partition.community_count(), 4);
        // Each triangle holds a quarter of the weight: 4·(1/4 − 1/16).
        assert!((run.partition.score() - 0.75).abs() < 1e-12);
        let direct = modularity_unipartite(&g, run.partition.assignment()).unwrap();
        assert_eq!(direct, run.partition.score());
    }

    #[test]
    fn single_edge_merges() {
        let g = WeightedGraph::from_edges(2, vec![(0, 1, 1.0)]).unwrap();
        let run = louvain_unipartite(&g, 0).unwrap();
        assert_eq!(run.partition.community_count(), 1);
        assert!(run.partition.score().abs() < 1e-12);

        let b = BipartiteGraph::from_edges(1, 1, [(0, 0)]).unwrap();
        let run = louvain_bipartite(&b, 0).unwrap();
        assert!(run.partition.score().abs() < 1e-12);
    }

    #[test]
    fn edgeless_graph_is_error() {
        let g = WeightedGraph::from_edges(3, vec![]).unwrap();
        assert!(matches!(
            louvain_unipartite(&g, 0),
            Err(Error::EmptyGraph(_))
        ));
        let b = BipartiteGraph::new(2, 2);
        assert!(matches!(
            louvain_bipartite(&b, 0),
            Err(Error::EmptyGraph(_))
        ));
    }

    #[test]
    fn bipartite_components_and_complete_block() {
        let mut edges = Vec::new();
        for (l, r) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            edges.push((l, r));
            edges.push((l + 2, r + 2));
        }
        let g = BipartiteGraph::from_edges(4, 4, edges).unwrap();
        let run = louvain_bipartite(&g, 11).unwrap();
        assert!((run.partition.score() - 0.5).abs() < 1e-12);
        assert_eq!(run.partition.community_count(), 2);

        let k33 =
            BipartiteGraph::from_edges(3, 3, (0..3).flat_map(|l| (0..3).map(move |r| (l, r))))
                .unwrap();
        // Every partition of a complete bipartite block scores exactly 0.
        let run = louvain_bipartite(&k33, 5).unwrap();
        assert!(run.partition.score().abs() < 1e-12);
    }

    #[test]
    fn multi_run_best_of_and_deterministic() {
        let g = triangles(2, &[(2, 3)]);
        let cfg = OptimizerConfig::unipartite().with_runs(20).with_seed(9);
        let (best, runs) = multi_run(&g, &cfg).unwrap();
        assert_eq!(runs.len(), 20);
        assert!((best.score() - 5.0 / 14.0).abs() < 1e-12);
        assert!(runs.iter().all(|r| r.score <= 5.0 / 14.0 + 1e-12));
        assert_eq!(
            runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
            (9..29).collect::<Vec<_>>()
        );
        // Ties resolve to the lowest seed.
        assert_eq!(best.seed(), 9);
        let (again, _) = multi_run(&g, &cfg).unwrap();
        assert_eq!(best, again);

        let one = OptimizerConfig::unipartite().with_runs(1).with_seed(4);
        let (best, runs) = multi_run(&g, &one).unwrap();
        assert_eq!(best, louvain_unipartite(&g, 4).unwrap().partition);
        assert_eq!(runs[0].score, best.score());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let g = triangles(1, &[]);
        let mut cfg = OptimizerConfig::unipartite().with_runs(0);
        assert!(matches!(multi_run(&g, &cfg), Err(Error::InvalidConfig(_))));
        cfg.runs = 1;
        cfg.min_gain = 0.0;
        assert!(matches!(multi_run(&g, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn size_filters() {
        let p = Partition::new(&[0, 0, 1, 2, 2], 0.0, 0);
        let f = filter_clusters(&p, GraphKind::Unipartite);
        assert_eq!(f.labels, vec![Some(0), Some(0), None, Some(1), Some(1)]);
        assert_eq!(f.dropped_nodes, vec![2]);
        assert_eq!(f.source_ids, vec![0, 2]);

        let p = Partition::new(&[0, 0, 1, 1, 1], 0.0, 0);
        let f = filter_clusters(&p, GraphKind::Bipartite);
        assert_eq!(f.labels, vec![None, None, Some(0), Some(0), Some(0)]);
        assert_eq!(f.dropped_communities, vec![0]);
        assert_eq!(f.sizes(), vec![3]);
    }

    #[test]
    fn traces_are_monotone() {
        let g = triangles(5, &[(2, 3), (5, 6), (8, 9), (11, 12), (14, 0), (1, 7)]);
        for seed in 0..20 {
            let run = louvain_unipartite(&g, seed).unwrap();
            for w in run.pass_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            for w in run.score_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            assert!((run.score_trace.last().unwrap() - run.partition.score()).abs() < 1e-9);
        }
    }
}
