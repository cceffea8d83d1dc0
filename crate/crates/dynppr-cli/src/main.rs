//! Command-line harness: replays seeded edge streams through the PPR
//! engines and emits JSON or CSV reports.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dynppr::experiment::{
    compare_scratch_vs_incremental, run_experiment, run_topk, ExperimentConfig, Mode,
};
use dynppr::report::{emit_report, ReportFormat};

#[derive(Parser)]
#[command(
    name = "dynppr",
    version,
    about = "Maintain approximate personalized PageRank over edge streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Edge list in SNAP plain-text format ('#' comments, integer pairs)
    #[arg(long)]
    graph: PathBuf,
    /// Teleport probability
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Residual threshold for the push engines
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of sampled test vertices
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Seed for sampling test vertices
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seed for the edge permutation
    #[arg(long = "stream-seed", default_value_t = 0)]
    stream_seed: u64,
    /// Fraction of edges forming the initial graph
    #[arg(long, default_value_t = 0.5)]
    split: f64,
    /// Treat the edge list as directed
    #[arg(long, default_value_t = false)]
    directed: bool,
    /// Report format
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Replay the event stream through one engine and report its metrics
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Engine: forward, reverse, montecarlo or reverse-scratch
        #[arg(long)]
        mode: Mode,
        /// Walks per source (montecarlo mode)
        #[arg(long)]
        walks: Option<usize>,
        /// Also score top-k precision per sample
        #[arg(long)]
        topk: Option<usize>,
    },
    /// Compare incremental reverse maintenance against per-event recomputation
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Events at which to measure the from-scratch cost
        #[arg(long = "scratch-samples", default_value_t = 50)]
        scratch_samples: usize,
    },
    /// Score top-k precision of an engine against the benchmark ranking
    Topk {
        #[command(flatten)]
        common: CommonArgs,
        /// Engine: forward or montecarlo
        #[arg(long)]
        mode: Mode,
        /// Walks per source (montecarlo mode)
        #[arg(long)]
        walks: Option<usize>,
        /// Ranking size
        #[arg(long)]
        topk: usize,
    },
}

fn config_from(common: &CommonArgs, mode: Mode) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(common.graph.clone(), mode);
    config.alpha = common.alpha;
    config.epsilon = common.epsilon;
    config.num_samples = common.samples;
    config.seed = common.seed;
    config.stream_seed = common.stream_seed;
    config.split_fraction = common.split;
    config.directed = common.directed;
    config
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            common,
            mode,
            walks,
            topk,
        } => {
            let mut config = config_from(&common, mode);
            config.num_walks = walks;
            config.top_k = topk;
            let report = run_experiment(&config)?;
            emit_report(&report, common.format, common.out.as_deref())?;
        }
        Command::Compare {
            common,
            scratch_samples,
        } => {
            let config = config_from(&common, Mode::Reverse);
            let report = compare_scratch_vs_incremental(&config, scratch_samples)?;
            emit_report(&report, common.format, common.out.as_deref())?;
        }
        Command::Topk {
            common,
            mode,
            walks,
            topk,
        } => {
            let mut config = config_from(&common, mode);
            config.num_walks = walks;
            config.top_k = Some(topk);
            let report = run_topk(&config)?;
            emit_report(&report, common.format, common.out.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
