use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use atlas::config::{AtlasConfig, ClusteringSpace};
use atlas::pipeline::{Pipeline, Report};
use atlas::service::{self, AtlasState};
use atlas::synth::{write_corpus, SynthSpec};
use atlas_core::atlas::read_bundle;
use atlas_core::manifold::{Metric, UmapParams};
use atlas_gateway::stub::{StubConfig, StubServer};

#[derive(Parser, Debug)]
#[command(name = "atlas", version, about = "Build, inspect and serve a content atlas of screen captures")]
struct Cli {
    /// Config file; relative paths inside it resolve against its directory.
    #[arg(long, short, global = true, env = "ATLAS_CONFIG", default_value = "atlas.toml")]
    config: PathBuf,
    /// Overrides corpus.work_dir.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
    /// Base URL for every gateway capability (after env overrides).
    #[arg(long, global = true)]
    gateway_url: Option<String>,
    /// Worker threads for the numeric kernels (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ReduceArgs {
    /// Output dimensions [default: 10]
    #[arg(long)]
    n_components: Option<usize>,
    /// Neighborhood size [default: 50]
    #[arg(long)]
    n_neighbors: Option<usize>,
    /// Minimum distance between embedded points [default: 0.05]
    #[arg(long)]
    min_dist: Option<f64>,
    /// Negative samples per positive edge [default: 20]
    #[arg(long)]
    negative_sample_rate: Option<usize>,
    /// Optimization epochs [default: 1000]
    #[arg(long)]
    n_epochs: Option<usize>,
    /// Input metric, cosine or euclidean [default: cosine]
    #[arg(long)]
    metric: Option<Metric>,
    /// Random seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    /// Reduce to this many components first, then to --n-components.
    #[arg(long)]
    two_stage: Option<usize>,
    /// Embedding space to reduce and cluster.
    #[arg(long, value_enum)]
    space: Option<ClusteringSpace>,
}

impl ReduceArgs {
    fn apply(&self, mut p: UmapParams) -> UmapParams {
        p.n_components = self.n_components.unwrap_or(p.n_components);
        p.n_neighbors = self.n_neighbors.unwrap_or(p.n_neighbors);
        p.min_dist = self.min_dist.unwrap_or(p.min_dist);
        p.negative_sample_rate = self.negative_sample_rate.unwrap_or(p.negative_sample_rate);
        p.n_epochs = self.n_epochs.unwrap_or(p.n_epochs);
        p.metric = self.metric.unwrap_or(p.metric);
        p.rng_seed = self.seed.unwrap_or(p.rng_seed);
        if self.two_stage.is_some() {
            p.two_stage_components = self.two_stage;
        }
        p
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that manifest, descriptions and embeddings are row-aligned.
    Validate,
    /// Generate a description for every screenshot not yet described.
    Describe,
    /// Embed screenshots and descriptions.
    Embed,
    /// Reduce the clustering space with UMAP.
    Reduce(ReduceArgs),
    /// 2D layout for display (t-SNE up to 20,000 points, UMAP above).
    Project2d {
        #[arg(long, value_enum)]
        space: Option<ClusteringSpace>,
    },
    /// HDBSCAN over the reduced embeddings.
    Cluster,
    /// Keywords and representative documents per cluster.
    Topics,
    /// Topic labels from the chat model.
    Label,
    /// Write the atlas bundle.
    Export,
    /// Every step from describe to export.
    Run,
    /// Serve the exported atlas over HTTP.
    Serve {
        /// Overrides service.bind and ATLAS_BIND.
        #[arg(long)]
        bind: Option<String>,
        /// Disable live query embedding; /retrieve answers 503.
        #[arg(long)]
        no_gateway: bool,
    },
    /// Dual-space retrieval for a text query.
    Retrieve {
        #[arg(long, short)]
        query: String,
        #[arg(long, short)]
        k: Option<usize>,
        /// Embed the raw query instead of the retrieval template.
        #[arg(long)]
        no_template: bool,
        #[arg(long)]
        json: bool,
    },
    /// Deterministic stand-in for the model gateway.
    StubGateway {
        #[arg(long, default_value = "127.0.0.1:8780")]
        bind: String,
        #[arg(long, default_value_t = 768)]
        image_dim: usize,
        #[arg(long, default_value_t = 1024)]
        text_dim: usize,
    },
    /// Write the synthetic demo corpus.
    Synth {
        #[arg(long, default_value = "data/synthetic")]
        out: PathBuf,
        #[arg(long, default_value_t = SynthSpec::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SynthSpec::default().per_theme)]
        per_theme: usize,
        #[arg(long, default_value_t = SynthSpec::default().noise)]
        noise: usize,
    },
    /// Print the effective configuration as TOML.
    Config {
        /// Print the built-in defaults instead.
        #[arg(long)]
        default: bool,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<AtlasConfig> {
    let mut cfg = if cli.config.exists() {
        AtlasConfig::load(&cli.config)?
    } else if cli.config == PathBuf::from("atlas.toml") {
        AtlasConfig::default()
    } else {
        anyhow::bail!("config file {} not found", cli.config.display());
    };
    cfg.apply_env();
    if let Some(url) = &cli.gateway_url {
        cfg.gateway.set_base_url(url);
    }
    if let Some(w) = &cli.work_dir {
        cfg.corpus.work_dir = std::path::absolute(w)?;
    }
    Ok(cfg)
}

fn print(report: Report) {
    println!("{report}");
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global().context("configuring threads")?;
    }
    match &cli.command {
        Command::StubGateway { bind, image_dim, text_dim } => {
            let stub = StubServer::start(bind, StubConfig { image_dim: *image_dim, text_dim: *text_dim, ..StubConfig::default() })?;
            println!("stub gateway listening on {}", stub.base_url());
            stub.wait();
            return Ok(());
        }
        Command::Synth { out, seed, per_theme, noise } => {
            let spec = SynthSpec { seed: *seed, per_theme: *per_theme, noise: *noise, ..SynthSpec::default() };
            let planted = write_corpus(out, &spec)?;
            println!("wrote {} records to {}", planted.len(), out.display());
            return Ok(());
        }
        Command::Config { default: true } => {
            print!("{}", AtlasConfig::default().to_toml());
            return Ok(());
        }
        _ => {}
    }

    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Reduce(a) => {
            cfg.clustering.space = a.space.unwrap_or(cfg.clustering.space);
        }
        Command::Project2d { space: Some(s) } => cfg.clustering.space = *s,
        _ => {}
    }
    if let Command::Config { .. } = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let p = Pipeline::new(cfg)?;
    match cli.command {
        Command::Validate => print(p.validate()?),
        Command::Describe => print(p.describe()?),
        Command::Embed => print(p.embed()?),
        Command::Reduce(a) => print(p.reduce(&a.apply(p.config.umap.clone()))?),
        Command::Project2d { .. } => print(p.project2d()?),
        Command::Cluster => print(p.cluster()?),
        Command::Topics => print(p.topics()?),
        Command::Label => print(p.label()?),
        Command::Export => print(p.export()?),
        Command::Run => {
            print(p.describe()?);
            print(p.embed()?);
            print(p.validate()?);
            print(p.reduce(&p.config.umap)?);
            print(p.project2d()?);
            print(p.cluster()?);
            print(p.topics()?);
            print(p.label()?);
            print(p.export()?);
        }
        Command::Retrieve { query, k, no_template, json } => {
            let gateway = p.gateway()?;
            let q = p.query(&query, k, !no_template && p.config.retrieval.use_template);
            let (report, panels) = p.retrieve(&q, &gateway)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&panels)?);
            } else {
                print(report);
            }
        }
        Command::Serve { bind, no_gateway } => {
            let bundle = read_bundle(p.artifacts.bundle()).with_context(|| format!("reading {} (run export first)", p.artifacts.bundle().display()))?;
            let (image, description) = p.indexes()?;
            let mut state = AtlasState::new(bundle)
                .with_indexes(image, description)
                .with_retrieval_defaults(p.config.retrieval.k, p.config.retrieval.template.clone());
            if let Some(root) = p.config.manifest_path().parent() {
                state = state.with_image_root(root);
            }
            if !no_gateway {
                state = state.with_embedder(Arc::new(p.gateway()?));
            }
            let bind = bind.unwrap_or_else(|| p.config.service.bind.clone());
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(service::serve(state, &bind))?;
        }
        Command::StubGateway { .. } | Command::Synth { .. } | Command::Config { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
