use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(
    name = "healthrank",
    version,
    about = "Multi-dimension health search pipeline"
)]
struct Cli {
    #[arg(long, global = true, default_value = "healthrank.toml")]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output depth of the subcommand.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamsChoice {
    Standard,
    Tuned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dimension {
    Support,
    Credibility,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ingest the corpus and build the inverted index.
    Index,
    /// Retrieve every topic with BM25.
    Search {
        #[arg(long, value_enum, default_value_t = ParamsChoice::Standard)]
        params: ParamsChoice,
    },
    /// Grid-search BM25 parameters on silver topics.
    Tune,
    /// Re-rank along one dimension.
    Rerank {
        #[arg(long, value_enum)]
        dimension: Dimension,
    },
    /// Fuse a preset's component runs.
    Fuse {
        #[arg(long)]
        preset: String,
    },
    /// Score a run against the qrels.
    Eval {
        /// Run file, or the id of a run in the work directory.
        #[arg(long)]
        run: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut config = config::PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let ctx = commands::Context {
        config,
        depth: cli.depth,
    };
    match cli.command {
        Command::Index => commands::index(&ctx),
        Command::Search { params } => commands::search(&ctx, params),
        Command::Tune => commands::tune(&ctx),
        Command::Rerank { dimension } => commands::rerank(&ctx, dimension),
        Command::Fuse { preset } => commands::fuse(&ctx, &preset),
        Command::Eval { run } => commands::eval(&ctx, &run),
    }
}
