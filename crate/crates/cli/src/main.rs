//! `newsloc`: run the neighbourhood-characterisation pipeline stage by stage.

mod cache;
mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::{ConfigError, PipelineConfig};
use stages::Pipeline;

#[derive(Parser, Debug)]
#[command(name = "newsloc", version, about = "Characterise neighbourhoods from local news")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    single_thread: bool,
    /// Output directory (default: `paths.output`, else `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Load and normalise the corpus.
    Ingest,
    /// Remove near-duplicate articles.
    Dedup,
    /// Detect, resolve and map place mentions.
    Geoparse,
    /// Mask, tokenise, build tf-idf vectors and the UMAP embedding.
    Vectorize,
    /// HDBSCAN clusters, soft memberships, hierarchy and top terms.
    Cluster,
    /// Zone and neighbourhood profiles.
    Profile,
    /// Pair Macro-F1 and per-cluster correlation with crime rates.
    Evaluate,
    /// Grid search over vocabulary size and UMAP settings.
    Grid,
    /// Write a synthetic corpus with planted ground truth.
    Synth,
    /// Run all analysis stages and collect the artifacts.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Dedup => "dedup",
            Command::Geoparse => "geoparse",
            Command::Vectorize => "vectorize",
            Command::Cluster => "cluster",
            Command::Profile => "profile",
            Command::Evaluate => "evaluate",
            Command::Grid => "grid",
            Command::Synth => "synth",
            Command::Report => "report",
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command, pipeline: &Pipeline) -> anyhow::Result<()> {
    match command {
        Command::Ingest => pipeline.ingest().map(drop),
        Command::Dedup => pipeline.dedup().map(drop),
        Command::Geoparse => pipeline.geoparse().map(drop),
        Command::Vectorize => pipeline.vectorize(),
        Command::Cluster => pipeline.cluster(),
        Command::Profile => pipeline.profile(),
        Command::Evaluate => pipeline.evaluate(),
        Command::Grid => pipeline.grid(),
        Command::Synth => pipeline.synth(),
        Command::Report => pipeline.report(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NL_LOG", "info")).format_timestamp(None).init();

    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("newsloc: {e}");
            return ExitCode::from(2);
        }
    };
    let out = cli.out.clone().or_else(|| cfg.paths.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let pipeline = Pipeline::new(cfg, out);
    let command = cli.command;
    let result = if cli.single_thread {
        newsloc::par::single_threaded(|| run(command, &pipeline))
    } else {
        run(command, &pipeline)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("newsloc: stage `{}` failed: {e:#}", command.name());
            ExitCode::FAILURE
        }
    }
}
