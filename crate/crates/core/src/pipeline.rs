//! Stage drivers shared by the CLI: ingest, project, cluster, bridge, and
//! the reproducibility manifest that records every artifact by digest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bridge::{build_report, BridgeReport, LinkRule};
use crate::error::{Error, Result};
use crate::graph::{NodeMeta, Partition, WeightedGraph};
use crate::ingest::{
    compute_stats, load_incidence, load_incidence_from, write_edge_list, write_meta, Dataset,
    DatasetStats, IngestOptions, IngestSummary,
};
use crate::louvain::{
    multi_run, GraphKind, MoveRule, OptimizerConfig, RunSummary, DEFAULT_BIPARTITE_RUNS,
    DEFAULT_MIN_GAIN, DEFAULT_UNIPARTITE_RUNS, RNG_NAME,
};
use crate::modularity::{modularity_bipartite, modularity_unipartite};
use crate::projection::{
    compute_idf_with_base, project_articles, project_concepts_with_counts, write_edge_tsv,
    write_graphml, LogBase,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_NAME: &str = "cobridge";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const INGEST_EDGES: &str = "graph.edges.tsv";
const INGEST_LEFT: &str = "left.meta.tsv";
const INGEST_RIGHT: &str = "right.meta.tsv";
const INGEST_JSON: &str = "ingest.json";
const REPORT_JSON: &str = "bridge_report.json";
const REPORT_TXT: &str = "bridge_report.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Network {
    Articles,
    Concepts,
    Bipartite,
}

impl Network {
    pub const ALL: [Network; 3] = [Network::Articles, Network::Concepts, Network::Bipartite];

    pub fn name(self) -> &'static str {
        match self {
            Network::Articles => "articles",
            Network::Concepts => "concepts",
            Network::Bipartite => "bipartite",
        }
    }

    pub fn graph_kind(self) -> GraphKind {
        match self {
            Network::Bipartite => GraphKind::Bipartite,
            _ => GraphKind::Unipartite,
        }
    }

    pub fn default_runs(self) -> usize {
        match self {
            Network::Bipartite => DEFAULT_BIPARTITE_RUNS,
            _ => DEFAULT_UNIPARTITE_RUNS,
        }
    }

    /// Fixed offset from the global seed; runs of one network never reuse
    /// another network's seeds for fewer than a million runs.
    pub fn seed_offset(self) -> u64 {
        match self {
            Network::Bipartite => 0,
            Network::Articles => 1_000_000,
            Network::Concepts => 2_000_000,
        }
    }

    pub fn base_seed(self, seed: u64) -> u64 {
        seed.wrapping_add(self.seed_offset())
    }

    pub fn partition_file(self) -> String {
        format!("partition.{}.tsv", self.name())
    }

    pub fn runs_file(self) -> String {
        format!("runs.{}.json", self.name())
    }

    pub fn edges_file(self) -> String {
        format!("{}.edges.tsv", self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Renders into memory, writes `dir/name` and returns its digest.
pub fn write_artifact(
    dir: &Path,
    name: &str,
    render: impl FnOnce(&mut Vec<u8>) -> io::Result<()>,
) -> Result<Artifact> {
    let mut buf = Vec::new();
    let path = dir.join(name);
    render(&mut buf).map_err(|e| Error::io(&path, e))?;
    fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
    Ok(Artifact {
        file: name.to_string(),
        sha256: sha256_hex(&buf),
        bytes: buf.len() as u64,
    })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<Artifact> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_artifact(dir, name, |buf| buf.write_all(&text))
}

fn hash_file(path: &Path) -> Result<Artifact> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Artifact {
        file: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub role: String,
    #[serde(flatten)]
    pub artifact: Artifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub wall_time_ms: f64,
    pub outputs: Vec<Artifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEcho {
    pub threshold: f64,
    pub log_base: LogBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeFilters {
    pub unipartite_min_size: usize,
    pub bipartite_min_size: usize,
}

impl Default for SizeFilters {
    fn default() -> Self {
        SizeFilters {
            unipartite_min_size: GraphKind::Unipartite.min_cluster_size(),
            bipartite_min_size: GraphKind::Bipartite.min_cluster_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: Option<u64>,
    pub ingest: Option<IngestOptions>,
    pub projection: Option<ProjectionEcho>,
    pub optimizers: BTreeMap<String, OptimizerConfig>,
    pub size_filters: Option<SizeFilters>,
    pub link_rule: Option<LinkRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub inputs: Vec<InputRecord>,
    pub config: ConfigEcho,
    pub stages: Vec<StageRecord>,
}

impl Default for PipelineManifest {
    fn default() -> Self {
        PipelineManifest {
            tool: TOOL_NAME.to_string(),
            version: TOOL_VERSION.to_string(),
            rng: RNG_NAME.to_string(),
            inputs: Vec::new(),
            config: ConfigEcho::default(),
            stages: Vec::new(),
        }
    }
}

impl PipelineManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Existing manifest in `dir`, or a fresh one.
    pub fn load_or_default(dir: &Path) -> Result<Self> {
        if dir.join(MANIFEST_FILE).exists() {
            Self::load(dir)
        } else {
            Ok(Self::default())
        }
    }

    pub fn record_stage(&mut self, stage: StageRecord) {
        match self.stages.iter_mut().find(|s| s.name == stage.name) {
            Some(slot) => *slot = stage,
            None => self.stages.push(stage),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        write_json(dir, MANIFEST_FILE, self).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub file: String,
    pub status: VerifyStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyStatus {
    Ok,
    Mismatch,
    Missing,
}

/// Re-hashes every artifact listed in the manifest of `dir`. Inputs are
/// checked too when they can still be found.
pub fn verify(dir: &Path) -> Result<Vec<VerifyOutcome>> {
    let manifest = PipelineManifest::load(dir)?;
    let mut out = Vec::new();
    let check = |path: &Path, expected: &Artifact, label: String| -> VerifyOutcome {
        let status = match fs::read(path) {
            Ok(bytes) if sha256_hex(&bytes) == expected.sha256 => VerifyStatus::Ok,
            Ok(_) => VerifyStatus::Mismatch,
            Err(_) => VerifyStatus::Missing,
        };
        VerifyOutcome {
            file: label,
            status,
        }
    };
    for input in &manifest.inputs {
        let path = PathBuf::from(&input.artifact.file);
        out.push(check(&path, &input.artifact, input.artifact.file.clone()));
    }
    for stage in &manifest.stages {
        for artifact in &stage.outputs {
            out.push(check(
                &dir.join(&artifact.file),
                artifact,
                artifact.file.clone(),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestRecord {
    pub options: IngestOptions,
    pub summary: IngestSummary,
    pub stats: DatasetStats,
}

pub struct IngestInputs<'a> {
    pub edges: &'a Path,
    pub left_meta: &'a Path,
    pub right_meta: &'a Path,
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads raw inputs and writes the normalized dataset into `out`.
pub fn ingest_stage(
    inputs: &IngestInputs<'_>,
    options: IngestOptions,
    out: &Path,
    manifest: &mut PipelineManifest,
) -> Result<(Dataset, IngestRecord)> {
    ensure_dir(out)?;
    let start = Instant::now();
    let data = load_incidence(inputs.edges, inputs.left_meta, inputs.right_meta, options)?;
    check_bipartite_invariants(&data)?;
    let record = IngestRecord {
        options,
        summary: data.summary,
        stats: compute_stats(&data),
    };
    let outputs = vec![
        write_artifact(out, INGEST_EDGES, |buf| write_edge_list(&data, buf))?,
        write_artifact(out, INGEST_LEFT, |buf| write_meta(&data.left, buf))?,
        write_artifact(out, INGEST_RIGHT, |buf| {
            write_meta(data.right.iter().chain(&data.excluded_right), buf)
        })?,
        write_json(out, INGEST_JSON, &record)?,
    ];
    manifest.inputs = [
        ("edges", inputs.edges),
        ("left_meta", inputs.left_meta),
        ("right_meta", inputs.right_meta),
    ]
    .into_iter()
    .map(|(role, path)| {
        hash_file(path).map(|artifact| InputRecord {
            role: role.to_string(),
            artifact,
        })
    })
    .collect::<Result<_>>()?;
    manifest.config.ingest = Some(options);
    manifest.record_stage(StageRecord {
        name: "ingest".into(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
    });
    Ok((data, record))
}

/// Reloads the normalized dataset written by [`ingest_stage`].
pub fn load_ingested(dir: &Path) -> Result<(Dataset, IngestRecord)> {
    let open = |name: &str| -> Result<BufReader<fs::File>> {
        let path = dir.join(name);
        fs::File::open(&path)
            .map(BufReader::new)
            .map_err(|e| Error::io(path, e))
    };
    let record: IngestRecord = serde_json::from_reader(open(INGEST_JSON)?)?;
    let mut data = load_incidence_from(
        open(INGEST_EDGES)?,
        open(INGEST_LEFT)?,
        open(INGEST_RIGHT)?,
        [INGEST_EDGES, INGEST_LEFT, INGEST_RIGHT],
        IngestOptions {
            exclude_generic: record.options.exclude_generic,
            ..IngestOptions::default()
        },
    )?;
    data.summary = record.summary;
    Ok((data, record))
}

fn check_bipartite_invariants(data: &Dataset) -> Result<()> {
    let (l, r) = data.graph.degree_sequences();
    let m = data.graph.edge_count();
    if l.iter().sum::<usize>() != m || r.iter().sum::<usize>() != m {
        return Err(Error::Assertion(
            "degree sums differ from the edge count".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub threshold: f64,
    pub log_base: LogBase,
    pub graphml: bool,
    pub cooccurrence_counts: bool,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            threshold: 0.0,
            log_base: LogBase::Natural,
            graphml: false,
            cooccurrence_counts: false,
        }
    }
}

/// Builds one projection in memory.
pub fn build_projection(
    data: &Dataset,
    network: Network,
    options: &ProjectionOptions,
) -> Result<(WeightedGraph, Option<Vec<u32>>)> {
    if !(options.threshold >= 0.0 && options.threshold.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "threshold must be a finite number >= 0, got {}",
            options.threshold
        )));
    }
    match network {
        Network::Articles => {
            let idf = compute_idf_with_base(&data.graph, options.log_base);
            Ok((project_articles(&data.graph, &idf, options.threshold), None))
        }
        Network::Concepts => {
            let (g, counts) = project_concepts_with_counts(&data.graph);
            Ok((g, Some(counts)))
        }
        Network::Bipartite => Err(Error::InvalidConfig(
            "the bipartite graph is not a projection".into(),
        )),
    }
}

/// Builds and writes one projection.
pub fn project_stage(
    data: &Dataset,
    network: Network,
    options: &ProjectionOptions,
    out: &Path,
    manifest: &mut PipelineManifest,
) -> Result<WeightedGraph> {
    ensure_dir(out)?;
    let start = Instant::now();
    let (g, counts) = build_projection(data, network, options)?;
    let nodes: &[NodeMeta] = match network {
        Network::Articles => &data.left,
        _ => &data.right,
    };
    let mut outputs = vec![write_artifact(out, &network.edges_file(), |buf| {
        write_edge_tsv(&g, nodes, buf)
    })?];
    if options.graphml {
        let name = format!("{}.graphml", network.name());
        outputs.push(write_artifact(out, &name, |buf| {
            write_graphml(&g, nodes, buf)
        })?);
    }
    if let (true, Some(counts)) = (options.cooccurrence_counts, counts) {
        outputs.push(write_artifact(out, "concepts.cooccurrence.tsv", |buf| {
            for (&(u, v, _), c) in g.edges().iter().zip(counts) {
                writeln!(
                    buf,
                    "{}\t{}\t{}",
                    nodes[u].external_id, nodes[v].external_id, c
                )?;
            }
            Ok(())
        })?);
    }
    if network == Network::Articles || manifest.config.projection.is_none() {
        manifest.config.projection = Some(ProjectionEcho {
            threshold: options.threshold,
            log_base: options.log_base,
        });
    }
    manifest.record_stage(StageRecord {
        name: format!("project.{}", network.name()),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
    });
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunsRecord {
    pub network: Network,
    pub rng: String,
    pub config: OptimizerConfig,
    pub best_seed: u64,
    pub best_score: f64,
    pub best_communities: usize,
    pub runs: Vec<RunSummary>,
}

pub fn optimizer_config(network: Network, seed: u64, runs: usize) -> OptimizerConfig {
    OptimizerConfig {
        runs,
        base_seed: network.base_seed(seed),
        min_gain: DEFAULT_MIN_GAIN,
        max_levels: None,
        move_rule: MoveRule::BestGain,
    }
}

fn partition_tsv<W: Write>(p: &Partition, ids: &[&NodeMeta], mut w: W) -> io::Result<()> {
    for (node, meta) in ids.iter().enumerate() {
        writeln!(w, "{}\t{}", meta.external_id, p.community_of(node))?;
    }
    Ok(())
}

/// Optimizes one network, checks the winning score against a from-scratch
/// recomputation and writes the partition and run summaries.
pub fn cluster_stage(
    data: &Dataset,
    network: Network,
    projection: Option<&WeightedGraph>,
    config: &OptimizerConfig,
    out: &Path,
    manifest: &mut PipelineManifest,
) -> Result<Partition> {
    ensure_dir(out)?;
    let start = Instant::now();
    let (best, runs) = match network {
        Network::Bipartite => {
            let r = multi_run(&data.graph, config)?;
            let check = modularity_bipartite(&data.graph, r.0.assignment())?;
            assert_score(r.0.score(), check, network)?;
            r
        }
        _ => {
            let g = projection
                .ok_or_else(|| Error::InvalidConfig("projection graph missing".into()))?;
            let r = multi_run(g, config)?;
            let check = modularity_unipartite(g, r.0.assignment())?;
            assert_score(r.0.score(), check, network)?;
            r
        }
    };
    let ids: Vec<&NodeMeta> = match network {
        Network::Articles => data.left.iter().collect(),
        Network::Concepts => data.right.iter().collect(),
        Network::Bipartite => data.combined_meta().collect(),
    };
    let record = RunsRecord {
        network,
        rng: RNG_NAME.to_string(),
        config: config.clone(),
        best_seed: best.seed(),
        best_score: best.score(),
        best_communities: best.community_count(),
        runs,
    };
    let outputs = vec![
        write_artifact(out, &network.partition_file(), |buf| {
            partition_tsv(&best, &ids, buf)
        })?,
        write_json(out, &network.runs_file(), &record)?,
    ];
    manifest
        .config
        .optimizers
        .insert(network.name().to_string(), config.clone());
    manifest.config.size_filters = Some(SizeFilters::default());
    manifest.record_stage(StageRecord {
        name: format!("cluster.{}", network.name()),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
    });
    Ok(best)
}

fn assert_score(stored: f64, recomputed: f64, network: Network) -> Result<()> {
    if (stored - recomputed).abs() > 1e-9 {
        return Err(Error::Assertion(format!(
            "{} partition score {stored} differs from recomputed {recomputed}",
            network.name()
        )));
    }
    Ok(())
}

/// Reads a partition file written by [`cluster_stage`]; rows must follow
/// the node order of `ids`.
pub fn read_partition(path: &Path, ids: &[&NodeMeta]) -> Result<Partition> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let mut labels = Vec::with_capacity(ids.len());
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = |message: String| Error::Parse {
            path: name.clone(),
            line: idx + 1,
            message,
        };
        let (id, community) = line
            .split_once('\t')
            .ok_or_else(|| parse("expected `node_id<TAB>community_id`".into()))?;
        let expected = ids
            .get(labels.len())
            .ok_or_else(|| parse("more rows than nodes".into()))?;
        if expected.external_id != id {
            return Err(parse(format!(
                "expected node {:?}, found {id:?}",
                expected.external_id
            )));
        }
        labels.push(
            community
                .trim()
                .parse::<usize>()
                .map_err(|e| parse(format!("bad community id: {e}")))?,
        );
    }
    if labels.len() != ids.len() {
        return Err(Error::Mismatch(format!(
            "{name} has {} rows, expected {}",
            labels.len(),
            ids.len()
        )));
    }
    Ok(Partition::new(&labels, f64::NAN, 0))
}

pub fn bridge_stage(
    data: &Dataset,
    article: &Partition,
    concept: &Partition,
    bipartite: &Partition,
    out: &Path,
    manifest: &mut PipelineManifest,
) -> Result<BridgeReport> {
    ensure_dir(out)?;
    let start = Instant::now();
    let rule = LinkRule::default();
    let report = build_report(data, article, concept, bipartite, rule)?;
    let outputs = vec![
        write_json(out, REPORT_JSON, &report)?,
        write_artifact(out, REPORT_TXT, |buf| {
            buf.write_all(report.render_text().as_bytes())
        })?,
    ];
    manifest.config.link_rule = Some(rule);
    manifest.record_stage(StageRecord {
        name: "bridge".into(),
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
    });
    Ok(report)
}

/// Loads the three partitions from `dir` for bridging.
pub fn load_partitions(data: &Dataset, dir: &Path) -> Result<[Partition; 3]> {
    let left: Vec<&NodeMeta> = data.left.iter().collect();
    let right: Vec<&NodeMeta> = data.right.iter().collect();
    let all: Vec<&NodeMeta> = data.combined_meta().collect();
    Ok([
        read_partition(&dir.join(Network::Articles.partition_file()), &left)?,
        read_partition(&dir.join(Network::Concepts.partition_file()), &right)?,
        read_partition(&dir.join(Network::Bipartite.partition_file()), &all)?,
    ])
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub edges: PathBuf,
    pub left_meta: PathBuf,
    pub right_meta: PathBuf,
    pub out: PathBuf,
    pub ingest: IngestOptions,
    pub projection: ProjectionOptions,
    pub seed: u64,
    pub runs: BTreeMap<Network, usize>,
    pub min_gain: f64,
    pub max_levels: Option<usize>,
}

impl PipelineConfig {
    pub fn new(edges: PathBuf, left_meta: PathBuf, right_meta: PathBuf, out: PathBuf) -> Self {
        PipelineConfig {
            edges,
            left_meta,
            right_meta,
            out,
            ingest: IngestOptions::default(),
            projection: ProjectionOptions::default(),
            seed: 0,
            runs: Network::ALL
                .iter()
                .map(|&n| (n, n.default_runs()))
                .collect(),
            min_gain: DEFAULT_MIN_GAIN,
            max_levels: None,
        }
    }

    pub fn optimizer(&self, network: Network) -> OptimizerConfig {
        OptimizerConfig {
            min_gain: self.min_gain,
            max_levels: self.max_levels,
            ..optimizer_config(
                network,
                self.seed,
                self.runs
                    .get(&network)
                    .copied()
                    .unwrap_or(network.default_runs()),
            )
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub dataset: Dataset,
    pub stats: DatasetStats,
    pub partitions: BTreeMap<Network, Partition>,
    pub report: BridgeReport,
    pub manifest: PipelineManifest,
}

/// Runs every stage and writes all artifacts plus the manifest into `out`.
/// Uses the current rayon pool.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput> {
    let out = config.out.as_path();
    let mut manifest = PipelineManifest::default();
    manifest.config.seed = Some(config.seed);
    let inputs = IngestInputs {
        edges: &config.edges,
        left_meta: &config.left_meta,
        right_meta: &config.right_meta,
    };
    let (data, record) = ingest_stage(&inputs, config.ingest, out, &mut manifest)
        .map_err(|e| e.in_stage("ingest"))?;
    let articles = project_stage(
        &data,
        Network::Articles,
        &config.projection,
        out,
        &mut manifest,
    )
    .map_err(|e| e.in_stage("project"))?;
    let concepts = project_stage(
        &data,
        Network::Concepts,
        &config.projection,
        out,
        &mut manifest,
    )
    .map_err(|e| e.in_stage("project"))?;

    let mut partitions = BTreeMap::new();
    for (network, graph) in [
        (Network::Articles, Some(&articles)),
        (Network::Concepts, Some(&concepts)),
        (Network::Bipartite, None),
    ] {
        let p = cluster_stage(
            &data,
            network,
            graph,
            &config.optimizer(network),
            out,
            &mut manifest,
        )
        .map_err(|e| e.in_stage("cluster"))?;
        partitions.insert(network, p);
    }
    let report = bridge_stage(
        &data,
        &partitions[&Network::Articles],
        &partitions[&Network::Concepts],
        &partitions[&Network::Bipartite],
        out,
        &mut manifest,
    )
    .map_err(|e| e.in_stage("bridge"))?;
    manifest.save(out)?;
    Ok(PipelineOutput {
        dataset: data,
        stats: record.stats,
        partitions,
        report,
        manifest,
    })
}
