//! `synth`: generation, cross-execution, ranking, pruning and export.

use std::path::{Path, PathBuf};

use serde::Serialize;

use verisynth::client::HttpCompletion;
use verisynth::harness::{ExecutionBackend, Harness};
use verisynth::pipeline::{export, run_synthesis, EndpointGenerator, FixtureClient, GeneratorClient, SimGenerator};
use verisynth::sim::SimConfig;
use verisynth::SeedInstance;

use crate::commands::{output, write};
use crate::config::digest;
use crate::exit::{Classify, CliResult, Failure};
use crate::inputs;
use crate::manifest::{file_name, Manifest};
use crate::Context;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// A fixture directory of problem files, `endpoint` for the configured
    /// completion endpoint, or `sim` for simulated problems.
    #[arg(long)]
    problems_source: String,
    /// Strategy file or built-in name.
    #[arg(long, default_value = "discriminative")]
    strategy: String,
    /// Candidate solutions per problem.
    #[arg(long)]
    m: Option<usize>,
    /// Candidate tests per problem.
    #[arg(long)]
    n: Option<usize>,
    /// Problems to request.
    #[arg(long)]
    problems: Option<usize>,
    /// Keep instances whose test scores do not vary.
    #[arg(long)]
    no_prune: bool,
    /// Dataset file; `dataset-m<m>-n<n>.jsonl` in the run directory by default.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file; `synth-report-m<m>-n<n>.json` in the run directory by default.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed instances shown to the endpoint as examples.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Per-execution wall clock limit.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Concurrent endpoint requests.
    #[arg(long, default_value_t = 4)]
    max_concurrent_requests: usize,
}

/// Concatenated fixture files in name order, for the run digest.
fn fixture_bytes(dir: &Path) -> CliResult<Vec<u8>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .or_input(format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        out.extend(p.file_name().unwrap_or_default().as_encoded_bytes());
        out.push(0);
        out.extend(inputs::read(&p)?);
        out.push(0);
    }
    Ok(out)
}

pub fn run(ctx: &Context, args: Args) -> CliResult {
    let mut cfg = ctx.config.clone();
    let p = &mut cfg.pipeline;
    p.m = args.m.unwrap_or(p.m);
    p.n = args.n.unwrap_or(p.n);
    p.problems = args.problems.unwrap_or(p.problems);
    p.prune &= !args.no_prune;
    cfg.limits.wall_timeout_ms = args.timeout_ms.unwrap_or(cfg.limits.wall_timeout_ms);
    let (m, n) = (cfg.pipeline.m, cfg.pipeline.n);

    let (strategy, strategy_bytes) = inputs::strategy(&args.strategy)?;
    let (seeds, seed_bytes): (Vec<SeedInstance>, Vec<u8>) = match &args.seeds {
        Some(path) => inputs::seeds(path)?,
        None => (Vec::new(), Vec::new()),
    };
    let judge = cfg.backend.clone().unwrap_or_else(ExecutionBackend::shell_judge);

    let (client, backend, source_bytes): (Box<dyn GeneratorClient>, ExecutionBackend, Vec<u8>) =
        match args.problems_source.as_str() {
            "sim" => {
                let sim = SimConfig {
                    m,
                    n,
                    instances: cfg.pipeline.problems,
                    ..cfg.sim.clone()
                };
                let generator = SimGenerator::new(&sim)?;
                let backend = generator.backend();
                (Box::new(generator), backend, Vec::new())
            }
            "endpoint" => {
                let endpoint = cfg
                    .endpoint
                    .clone()
                    .ok_or_else(|| Failure::input("`endpoint` source needs an `endpoint` config section"))?;
                let generator = EndpointGenerator::new(
                    HttpCompletion::new(endpoint),
                    cfg.pipeline.rng_seed,
                    args.max_concurrent_requests,
                );
                (Box::new(generator), judge, Vec::new())
            }
            dir => {
                let dir = Path::new(dir);
                if !dir.is_dir() {
                    return Err(Failure::input(format!(
                        "problem source `{}` is not a directory, `endpoint` or `sim`",
                        dir.display()
                    )));
                }
                let bytes = fixture_bytes(dir)?;
                (Box::new(FixtureClient::load(dir)?), judge, bytes)
            }
        };
    let mut manifest = Manifest::start(
        "synth",
        digest(
            "synth",
            &cfg,
            &args,
            &[("strategy", &strategy_bytes), ("seeds", &seed_bytes), ("source", &source_bytes)],
        ),
        cfg.pipeline.rng_seed,
    );

    let harness = Harness::new(backend, cfg.limits)?;
    let run = run_synthesis(client.as_ref(), &harness, &strategy, &seeds, &cfg.pipeline)?;
    let report = &run.report;
    if report.generated_problems == 0 {
        return Err(Failure {
            kind: crate::exit::Kind::Backend,
            error: anyhow::anyhow!("the generator produced no problems ({} failures)", report.generation_failures),
        });
    }

    let dir = &ctx.run_dir;
    let out = output(args.out.as_ref(), dir, &format!("dataset-m{m}-n{n}.jsonl"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).or_backend(format!("creating {}", parent.display()))?;
    }
    export(&run.assembly.records, &out).or_backend(format!("exporting {}", out.display()))?;
    let report_path = output(args.report.as_ref(), dir, &format!("synth-report-m{m}-n{n}.json"));
    write(&report_path, &serde_json::to_vec_pretty(report).or_backend("serializing report")?)?;

    manifest
        .artifact("dataset", &out, dir)
        .artifact("report", &report_path, dir)
        .count("m", m as u64)
        .count("n", n as u64)
        .count("requested_problems", report.requested_problems as u64)
        .count("generation_failures", report.generation_failures as u64)
        .count("unique_problems", report.unique_problems as u64)
        .count("degenerate", report.degenerate.len() as u64)
        .count("instances", report.instances as u64)
        .count("records", report.records as u64)
        .count("executions", report.executions)
        .metric("mean_retained_tests", report.mean_retained_tests);
    manifest.finish(dir, &file_name("synth", Some((m, n))))?;

    println!("instances {}", report.instances);
    println!("records {}", report.records);
    println!("executions {}", report.executions);
    println!("mean_retained_tests {}", report.mean_retained_tests);
    println!("dataset {}", out.display());
    Ok(())
}
