//! `verisynth` command-line driver.

mod commands;
mod config;
mod exit;
mod inputs;
mod manifest;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use crate::commands::{eval, evolve, rank, report, sim, synth};
use crate::config::RunConfig;
use crate::exit::CliResult;

#[derive(Debug, Parser)]
#[command(name = "verisynth", version, about = "Rank, evolve and synthesize verifiable problem data")]
struct Cli {
    /// JSON file with `evolve`, `pipeline`, `sim`, `eval`, `limits`,
    /// `backend` and `endpoint` sections. Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random draw in the run.
    #[arg(long, global = true)]
    rng_seed: Option<u64>,

    /// Worker threads for execution and evaluation.
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    /// Log filter, e.g. `warn` or `verisynth=debug`. Logs go to stderr.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    /// Where manifests and default artifacts are written.
    #[arg(long, global = true, default_value = ".")]
    run_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for a better filtering strategy.
    Evolve(evolve::Args),
    /// Generate problems, execute candidates and export the kept instances.
    Synth(synth::Args),
    /// Consistency score of a strategy.
    Eval(eval::Args),
    /// Rank one pass matrix with a strategy and print the result as JSON.
    Rank(rank::Args),
    /// Strategy quality on simulated worlds with known ground truth.
    Sim(sim::Args),
    /// Summarize the manifests in a run directory.
    Report(report::Args),
}

/// What every command receives besides its own arguments.
pub struct Context {
    pub config: RunConfig,
    pub run_dir: PathBuf,
    pub threads: usize,
}

fn run(cli: Cli) -> CliResult {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.rng_seed {
        config.set_seed(seed);
    }
    let threads = cli.parallelism.unwrap_or(config.pipeline.parallelism).max(1);
    config.set_parallelism(threads);
    let ctx = Context {
        config,
        run_dir: cli.run_dir,
        threads,
    };
    if !matches!(cli.command, Command::Report(_) | Command::Rank(_)) {
        std::fs::create_dir_all(&ctx.run_dir)
            .map_err(|e| exit::Failure::input(format!("creating run directory {}: {e}", ctx.run_dir.display())))?;
    }
    verisynth::par::with_threads(threads, || match cli.command {
        Command::Evolve(a) => evolve::run(&ctx, a),
        Command::Synth(a) => synth::run(&ctx, a),
        Command::Eval(a) => eval::run(&ctx, a),
        Command::Rank(a) => rank::run(&ctx, a),
        Command::Sim(a) => sim::run(&ctx, a),
        Command::Report(a) => report::run(&ctx, a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let filter = EnvFilter::try_new(&cli.log_level).unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}
