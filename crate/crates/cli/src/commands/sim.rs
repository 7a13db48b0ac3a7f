//! `sim`: strategy quality and retention on simulated worlds.

use std::path::PathBuf;

use serde::Serialize;

use verisynth::pipeline::{retention_sweep, PipelineConfig, SimGenerator};
use verisynth::sim::{sample_worlds, strategy_quality, LatentWorld, SimConfig};
use verisynth::{Builtin, Strategy};

use crate::commands::{csv, output, write};
use crate::config::digest;
use crate::exit::CliResult;
use crate::inputs;
use crate::manifest::{file_name, Manifest};
use crate::Context;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Strategy file or built-in name; repeatable. Every built-in by default.
    #[arg(long)]
    strategy: Vec<String>,
    /// Worlds per size.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated sizes to sweep, e.g. `4,8,16` or `8x4,16x8`.
    /// Smaller worlds are the leading block of larger ones.
    #[arg(long)]
    mn: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    no_criterion1: bool,
    /// CSV file; `sim.csv` in the run directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Row {
    strategy: String,
    m: usize,
    n: usize,
    instances: usize,
    k: usize,
    top1_correct_rate: f64,
    best_test_valid_rate: f64,
    consistency_vs_truth: f64,
    retained: usize,
    mean_retained_tests: f64,
    eval_exec: u64,
    matrix_exec: u64,
}

pub fn run(ctx: &Context, args: Args) -> CliResult {
    let mut cfg = ctx.config.clone();
    cfg.sim.instances = args.instances.unwrap_or(cfg.sim.instances);
    cfg.sim.m = args.m.unwrap_or(cfg.sim.m);
    cfg.sim.n = args.n.unwrap_or(cfg.sim.n);
    cfg.eval.k = args.k.unwrap_or(cfg.eval.k);
    cfg.eval.use_criterion1 &= !args.no_criterion1;
    let sizes = match &args.mn {
        Some(spec) => inputs::sizes(spec)?,
        None => vec![(cfg.sim.m, cfg.sim.n)],
    };

    let mut strategies: Vec<Strategy> = Vec::new();
    let mut strategy_bytes = Vec::new();
    if args.strategy.is_empty() {
        strategies.extend(Builtin::ALL.iter().map(|b| b.strategy()));
    }
    for spec in &args.strategy {
        let (s, bytes) = inputs::strategy(spec)?;
        strategies.push(s);
        strategy_bytes.extend(bytes);
    }
    let mut manifest = Manifest::start(
        "sim",
        digest("sim", &cfg, &args, &[("strategies", &strategy_bytes)]),
        cfg.sim.rng_seed,
    );

    let widest = SimConfig {
        m: sizes.iter().map(|s| s.0).max().unwrap_or(cfg.sim.m),
        n: sizes.iter().map(|s| s.1).max().unwrap_or(cfg.sim.n),
        ..cfg.sim.clone()
    };
    let worlds = sample_worlds(&widest)?;
    let pipeline = PipelineConfig {
        problems: cfg.sim.instances,
        ..cfg.pipeline.clone()
    };
    let mut rows = Vec::new();
    for &(m, n) in &sizes {
        SimConfig { m, n, ..cfg.sim.clone() }.validate()?;
        let cut: Vec<LatentWorld> = worlds.iter().map(|w| w.truncate(m, n)).collect();
        let source = SimGenerator::from_worlds(cut.clone());
        for s in &strategies {
            let q = strategy_quality(s, &cut, &cfg.eval)?;
            let retention = retention_sweep(&source, &[(m, n)], s, &pipeline)?[0];
            rows.push(Row {
                strategy: s.name.clone(),
                m,
                n,
                instances: cut.len(),
                k: cfg.eval.k,
                top1_correct_rate: q.top1_correct_rate,
                best_test_valid_rate: q.best_test_valid_rate,
                consistency_vs_truth: q.consistency_vs_truth,
                retained: retention.retained,
                mean_retained_tests: retention.mean_retained_tests,
                eval_exec: cfg.eval.exec_per_instance() * cut.len() as u64,
                matrix_exec: retention.executions,
            });
        }
    }

    let out = output(args.out.as_ref(), &ctx.run_dir, "sim.csv");
    let body = csv(&rows)?;
    write(&out, &body)?;
    manifest
        .artifact("csv", &out, &ctx.run_dir)
        .count("rows", rows.len() as u64)
        .count("instances", cfg.sim.instances as u64)
        .count("executions", rows.iter().map(|r| r.matrix_exec).sum());
    manifest.finish(&ctx.run_dir, &file_name("sim", None))?;
    print!("{}", String::from_utf8_lossy(&body));
    Ok(())
}
