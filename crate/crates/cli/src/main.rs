//! treecoca: experiment harness for distributed dual coordinate ascent over
//! tree-structured worker networks with simulated communication delays.
//!
//! Subcommands: run | sweep-h | optimize-h | bound-overlay | plot.
//! Exit codes: 0 success, 1 config error, 2 runtime error, 3 bound violation.
//! `TREECOCA_THREADS` caps the parallelism of multi-run commands.

mod commands;
mod config;
mod error;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{ExperimentConfig, Overrides};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "treecoca", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the seed range for multi-seed commands, e.g. 0..49 (inclusive).
    #[arg(long, value_parser = parse_seed_range)]
    seeds: Option<SeedRange>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the timestamp comment so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// Verify w = A*alpha after every node call (slow).
    #[arg(long)]
    debug_consistency: bool,
}

#[derive(Clone, Copy, Debug)]
struct SeedRange(u64, u64);

fn parse_seed_range(s: &str) -> Result<SeedRange, String> {
    let (a, b) = s.split_once("..").ok_or("expected FIRST..LAST")?;
    let first: u64 = a.trim().parse().map_err(|_| "bad first seed")?;
    let last: u64 = b.trim().parse().map_err(|_| "bad last seed")?;
    Ok(SeedRange(first, last))
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on each configured topology; write trace CSVs.
    Run(CommonArgs),
    /// Sweep local iterations H across delay ratios; write long + summary CSVs.
    SweepH(CommonArgs),
    /// Grid-optimize H per delay ratio from the bound constants.
    OptimizeH(CommonArgs),
    /// Compare mean measured suboptimality against the theoretical bound.
    BoundOverlay(CommonArgs),
    /// Emit a matplotlib script for previously written CSVs.
    Plot {
        /// gap-time | h-star
        #[arg(long)]
        kind: commands::plot::PlotKind,
        /// Path of the script to write.
        #[arg(long)]
        out: PathBuf,
        /// Input CSVs.
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch() -> Result<Vec<PathBuf>, CliError> {
    init_thread_pool()?;
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => with_config(args, commands::run::run),
        Command::SweepH(args) => with_config(args, commands::sweep::run),
        Command::OptimizeH(args) => with_config(args, commands::optimize::run),
        Command::BoundOverlay(args) => with_config(args, commands::bound::run),
        Command::Plot { kind, out, csvs } => commands::plot::run(*kind, out, csvs),
    }
}

fn with_config(
    args: &CommonArgs,
    f: impl Fn(&ExperimentConfig, &Overrides) -> Result<Vec<PathBuf>, CliError>,
) -> Result<Vec<PathBuf>, CliError> {
    let overrides = Overrides {
        seed: args.seed,
        seeds: args.seeds.map(|SeedRange(a, b)| [a, b]),
        out_dir: args.out.clone(),
        deterministic: args.deterministic,
        debug_consistency: args.debug_consistency,
    };
    let mut config = ExperimentConfig::load(&args.config)?;
    config.apply_overrides(&overrides);
    f(&config, &overrides)
}

fn init_thread_pool() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("TREECOCA_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| CliError::Config(format!("TREECOCA_THREADS={raw:?} is not a number")))?;
        if n == 0 {
            return Err(CliError::Config("TREECOCA_THREADS must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}
