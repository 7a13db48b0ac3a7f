//! `eval`: consistency score of one strategy.

use std::path::PathBuf;

use serde::Serialize;

use verisynth::evaluator::consistency_of_cases;

use crate::commands::{cases, output, write};
use crate::config::digest;
use crate::exit::{Classify, CliResult};
use crate::inputs;
use crate::manifest::{file_name, Manifest};
use crate::Context;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Strategy file or built-in name.
    #[arg(long, default_value = "initial")]
    strategy: String,
    /// Seed instances (JSON array or JSONL). Simulated worlds when absent.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Number of simulated worlds.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    no_criterion1: bool,
    /// Report file; `eval-report.json` in the run directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: Args) -> CliResult {
    let mut cfg = ctx.config.clone();
    cfg.sim.instances = args.instances.unwrap_or(cfg.sim.instances);
    cfg.eval.k = args.k.unwrap_or(cfg.eval.k);
    cfg.eval.use_criterion1 &= !args.no_criterion1;
    let (strategy, strategy_bytes) = inputs::strategy(&args.strategy)?;
    let (cases, seed_bytes) = cases(args.seeds.as_deref(), &cfg.sim)?;
    let mut manifest = Manifest::start(
        "eval",
        digest("eval", &cfg, &args, &[("strategy", &strategy_bytes), ("seeds", &seed_bytes)]),
        cfg.sim.rng_seed,
    );
    let report = consistency_of_cases(&strategy, &cases, &cfg.eval)?;

    let out = output(args.out.as_ref(), &ctx.run_dir, "eval-report.json");
    write(&out, &serde_json::to_vec_pretty(&report).or_backend("serializing report")?)?;
    manifest
        .artifact("report", &out, &ctx.run_dir)
        .count("instances", report.per_instance.len() as u64)
        .count("satisfied", report.satisfied() as u64)
        .count("faults", report.faults() as u64)
        .count("executions", report.total_exec)
        .metric("score", report.score);
    manifest.finish(&ctx.run_dir, &file_name("eval", None))?;

    println!("strategy {}", strategy.name);
    println!("score {}", report.score);
    println!("criterion1_failures {}", report.criterion1_failures());
    println!("criterion2_failures {}", report.criterion2_failures());
    println!("faults {}", report.faults());
    println!("total_exec {}", report.total_exec);
    Ok(())
}
