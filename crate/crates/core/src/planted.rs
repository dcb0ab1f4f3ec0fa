//! Planted-partition bipartite generator used by tests and benchmarks.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeKind, NodeMeta};
use crate::ingest::{write_meta, Dataset, IngestSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub blocks: usize,
    pub left_per_block: usize,
    pub right_per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub graph: BipartiteGraph,
    pub left_truth: Vec<usize>,
    pub right_truth: Vec<usize>,
}

impl Planted {
    /// Ground truth over the combined (Left then Right) index space.
    pub fn truth(&self) -> Vec<usize> {
        self.left_truth
            .iter()
            .chain(&self.right_truth)
            .copied()
            .collect()
    }

    /// Wraps the graph as a dataset. Left ids are `a<i>`, Right ids `k<j>`;
    /// both sides carry their block as category `block<b>`.
    pub fn to_dataset(&self) -> Dataset {
        let left = self
            .left_truth
            .iter()
            .enumerate()
            .map(|(i, b)| {
                NodeMeta::new(format!("a{i}"), NodeKind::Left).with_category(format!("block{b}"))
            })
            .collect();
        let right = self
            .right_truth
            .iter()
            .enumerate()
            .map(|(j, b)| {
                NodeMeta::new(format!("k{j}"), NodeKind::Right).with_category(format!("block{b}"))
            })
            .collect();
        Dataset {
            graph: self.graph.clone(),
            left,
            right,
            excluded_right: Vec::new(),
            summary: IngestSummary {
                lines_read: self.graph.edge_count(),
                edges_added: self.graph.edge_count(),
                ..Default::default()
            },
        }
    }

    /// Writes `edges.tsv`, `left.tsv` and `right.tsv` into `dir`.
    pub fn write_fixture(&self, dir: &Path) -> Result<()> {
        let data = self.to_dataset();
        let create = |name: &str| {
            let path = dir.join(name);
            File::create(&path)
                .map(BufWriter::new)
                .map_err(|e| Error::io(path, e))
        };
        let mut edges = create("edges.tsv")?;
        for (l, r) in data.graph.edges() {
            writeln!(
                edges,
                "{}\t{}",
                data.left[l].external_id, data.right[r].external_id
            )
            .map_err(|e| Error::io(dir.join("edges.tsv"), e))?;
        }
        edges
            .flush()
            .map_err(|e| Error::io(dir.join("edges.tsv"), e))?;
        write_meta(&data.left, create("left.tsv")?)
            .map_err(|e| Error::io(dir.join("left.tsv"), e))?;
        write_meta(&data.right, create("right.tsv")?)
            .map_err(|e| Error::io(dir.join("right.tsv"), e))?;
        Ok(())
    }
}

pub fn generate_planted(config: &PlantedConfig) -> Result<Planted> {
    let PlantedConfig {
        blocks,
        left_per_block,
        right_per_block,
        p_in,
        p_out,
        seed,
    } = *config;
    if blocks == 0 || left_per_block == 0 || right_per_block == 0 {
        return Err(Error::InvalidConfig(
            "planted blocks must be non-empty".into(),
        ));
    }
    let valid = |p: f64| (0.0..=1.0).contains(&p);
    if !valid(p_in) || !valid(p_out) || p_in <= p_out {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= p_out < p_in <= 1, got p_in = {p_in}, p_out = {p_out}"
        )));
    }
    let n_left = blocks * left_per_block;
    let n_right = blocks * right_per_block;
    let left_truth: Vec<usize> = (0..n_left).map(|i| i / left_per_block).collect();
    let right_truth: Vec<usize> = (0..n_right).map(|j| j / right_per_block).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = BipartiteGraph::new(n_left, n_right);
    for (l, &lb) in left_truth.iter().enumerate() {
        for (r, &rb) in right_truth.iter().enumerate() {
            let p = if lb == rb { p_in } else { p_out };
            if p > 0.0 && rng.random::<f64>() < p {
                graph.add_edge(l, r)?;
            }
        }
    }
    Ok(Planted {
        graph,
        left_truth,
        right_truth,
    })
}
