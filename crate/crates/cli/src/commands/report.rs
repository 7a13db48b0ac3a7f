//! `report`: tables across the manifests of a run directory.

use std::path::PathBuf;

use serde::Serialize;

use crate::commands::{csv, write};
use crate::exit::{Classify, CliResult, Failure};
use crate::manifest::load_all;
use crate::Context;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Directory to summarize; the run directory by default.
    dir: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RetentionRow {
    m: u64,
    n: u64,
    instances: u64,
    records: u64,
    executions: u64,
    mean_retained_tests: f64,
}

pub fn run(ctx: &Context, args: Args) -> CliResult {
    let dir = args.dir.unwrap_or_else(|| ctx.run_dir.clone());
    let manifests = load_all(&dir)?;
    if manifests.is_empty() {
        return Err(Failure::input(format!("no manifests in {}", dir.display())));
    }

    for (name, m) in manifests.iter().filter(|(_, m)| m.command == "evolve") {
        let history = m
            .resolve("history", &dir)
            .ok_or_else(|| Failure::input(format!("{name} lists no history")))?;
        let text = std::fs::read(&history).or_input(format!("reading {}", history.display()))?;
        write(&dir.join("report-history.csv"), &text)?;
        let rows = text.iter().filter(|&&b| b == b'\n').count().saturating_sub(1);
        println!("evolve: {rows} iterations, fitness {} -> {}", m.metrics["initial_fitness"], m.metrics["best_fitness"]);
    }

    let mut retention: Vec<RetentionRow> = manifests
        .iter()
        .filter(|(_, m)| m.command == "synth")
        .map(|(_, m)| {
            let c = |k: &str| m.counts.get(k).copied().unwrap_or(0);
            RetentionRow {
                m: c("m"),
                n: c("n"),
                instances: c("instances"),
                records: c("records"),
                executions: c("executions"),
                mean_retained_tests: m.metrics.get("mean_retained_tests").copied().unwrap_or(0.0),
            }
        })
        .collect();
    if !retention.is_empty() {
        retention.sort_by_key(|r| (r.m, r.n));
        write(&dir.join("report-retention.csv"), &csv(&retention)?)?;
        let records: u64 = retention.iter().map(|r| r.records).sum();
        let tests: f64 = retention.iter().map(|r| r.mean_retained_tests * r.records as f64).sum();
        let mean = if records == 0 { 0.0 } else { tests / records as f64 };
        for r in &retention {
            println!(
                "synth m={} n={}: {} of {} instances kept, {} executions",
                r.m, r.n, r.records, r.instances, r.executions
            );
        }
        println!("mean_retained_tests {mean}");
    }

    for (_, m) in manifests.iter().filter(|(_, m)| m.command == "eval") {
        println!("eval: score {}", m.metrics["score"]);
    }
    for (_, m) in manifests.iter().filter(|(_, m)| m.command == "sim") {
        println!("sim: {} rows", m.counts.get("rows").copied().unwrap_or(0));
    }
    Ok(())
}
