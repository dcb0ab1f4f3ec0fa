use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cobridge::ingest::{IngestOptions, UnknownIds};
use cobridge::louvain::DEFAULT_MIN_GAIN;
use cobridge::pipeline::{
    self, bridge_stage, build_projection, cluster_stage, ingest_stage, load_ingested,
    load_partitions, project_stage, IngestInputs, Network, PipelineConfig, PipelineManifest,
    ProjectionOptions, VerifyStatus,
};
use cobridge::planted::{generate_planted, PlantedConfig};
use cobridge::projection::LogBase;
use cobridge::Error;

#[derive(Parser)]
#[command(
    name = "cobridge",
    version,
    about = "Two-mode community detection and cluster bridging"
)]
struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the incidence list and metadata, write normalized copies and statistics.
    Ingest {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        ingest: IngestArgs,
        /// Also write the ingest summary JSON here (it always goes to stdout).
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a one-mode projection as a weighted edge list.
    Project {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        projection: ProjectionArgs,
        /// Also write GraphML.
        #[arg(long)]
        graphml: bool,
        /// Also write raw co-occurrence counts (concept mode).
        #[arg(long)]
        counts: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run multi-start Louvain on one network.
    Cluster {
        #[arg(long, value_enum)]
        network: NetworkArg,
        /// Number of runs; defaults to 100 for projections and 1000 for the bipartite graph.
        #[arg(long)]
        runs: Option<usize>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[command(flatten)]
        projection: ProjectionArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Link co-clusters to the one-mode clusters and infer concept labels.
    Bridge {
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage end to end.
    Pipeline {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        ingest: IngestArgs,
        #[command(flatten)]
        projection: ProjectionArgs,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[arg(long, default_value_t = 100)]
        runs_articles: usize,
        #[arg(long, default_value_t = 100)]
        runs_concepts: usize,
        #[arg(long, default_value_t = 1000)]
        runs_bipartite: usize,
        #[arg(long)]
        graphml: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-hash every artifact listed in the manifest.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a planted-partition fixture (edges.tsv, left.tsv, right.tsv).
    Generate {
        #[arg(long, default_value_t = 4)]
        blocks: usize,
        #[arg(long, default_value_t = 50)]
        left_per_block: usize,
        #[arg(long, default_value_t = 200)]
        right_per_block: usize,
        #[arg(long, default_value_t = 0.3)]
        p_in: f64,
        #[arg(long, default_value_t = 0.01)]
        p_out: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    left_meta: PathBuf,
    #[arg(long)]
    right_meta: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Keep concepts flagged as generic.
    #[arg(long)]
    keep_generic: bool,
    #[arg(long, value_enum, default_value_t = UnknownArg::Reject)]
    unknown_ids: UnknownArg,
}

impl IngestArgs {
    fn options(&self) -> IngestOptions {
        IngestOptions {
            exclude_generic: !self.keep_generic,
            unknown_ids: match self.unknown_ids {
                UnknownArg::Reject => UnknownIds::Reject,
                UnknownArg::Register => UnknownIds::Register,
                UnknownArg::Skip => UnknownIds::Skip,
            },
        }
    }
}

#[derive(Args)]
struct ProjectionArgs {
    /// Keep article edges with cosine weight strictly above this value.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = LogArg::E)]
    log_base: LogArg,
}

impl ProjectionArgs {
    fn options(&self) -> ProjectionOptions {
        ProjectionOptions {
            threshold: self.threshold,
            log_base: match self.log_base {
                LogArg::E => LogBase::Natural,
                LogArg::Two => LogBase::Two,
                LogArg::Ten => LogBase::Ten,
            },
            ..ProjectionOptions::default()
        }
    }
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MIN_GAIN)]
    min_gain: f64,
    #[arg(long)]
    max_levels: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Articles,
    Concepts,
}

#[derive(Clone, Copy, ValueEnum)]
enum NetworkArg {
    Articles,
    Concepts,
    Bipartite,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnknownArg {
    Reject,
    Register,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogArg {
    E,
    #[value(name = "2")]
    Two,
    #[value(name = "10")]
    Ten,
}

struct Failure {
    stage: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    fn at(stage: &'static str) -> impl FnOnce(Error) -> Failure {
        move |e| Failure {
            stage,
            code: if e.is_input_error() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("cobridge: cannot start thread pool: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cobridge: {} stage failed: {}", f.stage, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Ingest {
            inputs,
            ingest,
            summary,
            out,
        } => cmd_ingest(&inputs, ingest.options(), summary.as_deref(), &out),
        Command::Project {
            mode,
            projection,
            graphml,
            counts,
            out,
        } => {
            let options = ProjectionOptions {
                graphml,
                cooccurrence_counts: counts,
                ..projection.options()
            };
            let network = match mode {
                Mode::Articles => Network::Articles,
                Mode::Concepts => Network::Concepts,
            };
            cmd_project(network, &options, &out)
        }
        Command::Cluster {
            network,
            runs,
            optimizer,
            projection,
            out,
        } => {
            let network = match network {
                NetworkArg::Articles => Network::Articles,
                NetworkArg::Concepts => Network::Concepts,
                NetworkArg::Bipartite => Network::Bipartite,
            };
            cmd_cluster(network, runs, &optimizer, &projection.options(), &out)
        }
        Command::Bridge { out } => cmd_bridge(&out),
        Command::Pipeline {
            inputs,
            ingest,
            projection,
            optimizer,
            runs_articles,
            runs_concepts,
            runs_bipartite,
            graphml,
            out,
        } => {
            let mut config =
                PipelineConfig::new(inputs.edges, inputs.left_meta, inputs.right_meta, out);
            config.ingest = ingest.options();
            config.projection = ProjectionOptions {
                graphml,
                ..projection.options()
            };
            config.seed = optimizer.seed;
            config.min_gain = optimizer.min_gain;
            config.max_levels = optimizer.max_levels;
            config.runs = [
                (Network::Articles, runs_articles),
                (Network::Concepts, runs_concepts),
                (Network::Bipartite, runs_bipartite),
            ]
            .into_iter()
            .collect();
            cmd_pipeline(&config)
        }
        Command::Verify { out } => cmd_verify(&out),
        Command::Generate {
            blocks,
            left_per_block,
            right_per_block,
            p_in,
            p_out,
            seed,
            out,
        } => {
            let planted = generate_planted(&PlantedConfig {
                blocks,
                left_per_block,
                right_per_block,
                p_in,
                p_out,
                seed,
            })
            .map_err(Failure::at("generate"))?;
            fs::create_dir_all(&out).map_err(|e| {
                Failure::at("generate")(Error::Io {
                    path: out.clone(),
                    source: e,
                })
            })?;
            planted.write_fixture(&out).map_err(Failure::at("generate"))
        }
    }
}

fn cmd_ingest(
    inputs: &InputArgs,
    options: IngestOptions,
    summary: Option<&Path>,
    out: &Path,
) -> Outcome {
    let fail = || Failure::at("ingest");
    let mut manifest = PipelineManifest::default();
    let io_inputs = IngestInputs {
        edges: &inputs.edges,
        left_meta: &inputs.left_meta,
        right_meta: &inputs.right_meta,
    };
    let (_, record) = ingest_stage(&io_inputs, options, out, &mut manifest).map_err(fail())?;
    let text = serde_json::to_string_pretty(&record).map_err(|e| fail()(e.into()))?;
    println!("{text}");
    if let Some(path) = summary {
        fs::write(path, format!("{text}\n")).map_err(|e| {
            fail()(Error::Io {
                path: path.to_path_buf(),
                source: e,
            })
        })?;
    }
    manifest.save(out).map_err(fail())
}

fn cmd_project(network: Network, options: &ProjectionOptions, out: &Path) -> Outcome {
    let fail = || Failure::at("project");
    let (data, _) = load_ingested(out).map_err(fail())?;
    let mut manifest = PipelineManifest::load_or_default(out).map_err(fail())?;
    let g = project_stage(&data, network, options, out, &mut manifest).map_err(fail())?;
    eprintln!(
        "{}: {} nodes, {} edges",
        network.name(),
        g.node_count(),
        g.edge_count()
    );
    manifest.save(out).map_err(fail())
}

fn cmd_cluster(
    network: Network,
    runs: Option<usize>,
    optimizer: &OptimizerArgs,
    projection: &ProjectionOptions,
    out: &Path,
) -> Outcome {
    let fail = || Failure::at("cluster");
    let (data, _) = load_ingested(out).map_err(fail())?;
    let mut manifest = PipelineManifest::load_or_default(out).map_err(fail())?;
    let graph = match network {
        Network::Bipartite => None,
        _ => Some(
            build_projection(&data, network, projection)
                .map_err(fail())?
                .0,
        ),
    };
    let mut config = pipeline::optimizer_config(
        network,
        optimizer.seed,
        runs.unwrap_or(network.default_runs()),
    );
    config.min_gain = optimizer.min_gain;
    config.max_levels = optimizer.max_levels;
    manifest.config.seed = Some(optimizer.seed);
    let best = cluster_stage(&data, network, graph.as_ref(), &config, out, &mut manifest)
        .map_err(fail())?;
    eprintln!(
        "{}: best seed {}, score {:.6}, {} communities",
        network.name(),
        best.seed(),
        best.score(),
        best.community_count()
    );
    manifest.save(out).map_err(fail())
}

fn cmd_bridge(out: &Path) -> Outcome {
    let fail = || Failure::at("bridge");
    let (data, _) = load_ingested(out).map_err(fail())?;
    let mut manifest = PipelineManifest::load_or_default(out).map_err(fail())?;
    let [article, concept, bipartite] = load_partitions(&data, out).map_err(fail())?;
    let report =
        bridge_stage(&data, &article, &concept, &bipartite, out, &mut manifest).map_err(fail())?;
    print!("{}", report.render_text());
    manifest.save(out).map_err(fail())
}

fn cmd_pipeline(config: &PipelineConfig) -> Outcome {
    let output = pipeline::run_pipeline(config).map_err(Failure::at("pipeline"))?;
    print!("{}", output.report.render_text());
    Ok(())
}

fn cmd_verify(out: &Path) -> Outcome {
    let outcomes = pipeline::verify(out).map_err(Failure::at("verify"))?;
    let mut bad = 0;
    for o in &outcomes {
        let tag = match o.status {
            VerifyStatus::Ok => "ok",
            VerifyStatus::Mismatch => "MISMATCH",
            VerifyStatus::Missing => "MISSING",
        };
        if o.status != VerifyStatus::Ok {
            bad += 1;
        }
        println!("{tag}\t{}", o.file);
    }
    if bad > 0 {
        return Err(Failure {
            stage: "verify",
            code: 3,
            message: format!("{bad} of {} artifacts failed verification", outcomes.len()),
        });
    }
    Ok(())
}
