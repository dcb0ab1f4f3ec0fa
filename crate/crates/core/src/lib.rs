//! Bipartite co-clustering as a bridge between one-mode clusterings.
//!
//! The pipeline builds a two-mode graph from incidence data (articles ×
//! concepts), derives both one-mode projections, finds communities in all
//! three networks with a seeded multi-run Louvain optimizer (Newman
//! modularity on the projections, Barber modularity on the bipartite graph)
//! and then links the three partitions through their overlaps so that
//! category labels known for one node kind can be transferred to the other.
//!
//! Module map:
//! - [`graph`]: bipartite and weighted graph types, partitions, node metadata
//! - [`ingest`]: TSV incidence/metadata parsing and dataset statistics
//! - [`projection`]: concept co-occurrence and idf-cosine article projections
//! - [`modularity`]: scoring, move gains and an exhaustive oracle
//! - [`louvain`]: seeded Louvain, multi-run selection, cluster size filter
//! - [`bridge`]: overlap matrices, cluster linking and label inference
//! - [`planted`]: planted-partition bipartite generator
//! - [`nmi`]: normalized mutual information
//! - [`pipeline`]: end-to-end driver and reproducibility manifest

pub mod bridge;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod louvain;
pub mod modularity;
pub mod nmi;
pub mod pipeline;
pub mod planted;
pub mod projection;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, NodeKind, NodeMeta, Partition, WeightedGraph};
