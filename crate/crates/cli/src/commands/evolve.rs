//! `evolve`: island MAP-Elites search from the initial strategy.

use std::path::PathBuf;

use serde::Serialize;

use verisynth::client::{Completion, HttpCompletion};
use verisynth::evolve::{evolve, CaseFitness};

use crate::commands::{cases, write};
use crate::config::digest;
use crate::exit::{Classify, CliResult, Failure};
use crate::manifest::{file_name, Manifest};
use crate::Context;

#[derive(Debug, clap::Args, Serialize)]
pub struct Args {
    /// Seed instances (JSON array or JSONL). Without it, fitness is measured
    /// on simulated worlds from the `sim` config section.
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Number of simulated worlds.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    islands: Option<usize>,
    /// Offspring per island per generation.
    #[arg(long)]
    offspring: Option<usize>,
    #[arg(long)]
    migration_interval: Option<usize>,
    /// Extremes checked on each side of the solution ranking.
    #[arg(long)]
    k: Option<usize>,
    /// Score with the agreement criterion only.
    #[arg(long)]
    no_criterion1: bool,
    /// Let the configured endpoint propose one offspring per island per
    /// generation.
    #[arg(long)]
    external: bool,
}

#[derive(Serialize)]
struct Elite<'a> {
    island: usize,
    complexity: usize,
    behavior: usize,
    fitness: f64,
    id: u64,
    generation: usize,
    parents: &'a [u64],
    strategy: &'a str,
}

pub fn run(ctx: &Context, args: Args) -> CliResult {
    let mut cfg = ctx.config.clone();
    let e = &mut cfg.evolve;
    e.iterations = args.iterations.unwrap_or(e.iterations);
    e.islands = args.islands.unwrap_or(e.islands);
    e.offspring_per_iteration = args.offspring.unwrap_or(e.offspring_per_iteration);
    e.migration_interval = args.migration_interval.unwrap_or(e.migration_interval);
    e.external_mutation |= args.external;
    cfg.sim.instances = args.instances.unwrap_or(cfg.sim.instances);
    cfg.eval.k = args.k.unwrap_or(cfg.eval.k);
    cfg.eval.use_criterion1 &= !args.no_criterion1;

    let (cases, seed_bytes) = cases(args.seeds.as_deref(), &cfg.sim)?;
    let instances = cases.len();
    let mut manifest = Manifest::start(
        "evolve",
        digest("evolve", &cfg, &args, &[("seeds", &seed_bytes)]),
        cfg.evolve.rng_seed,
    );
    let fitness = CaseFitness::new(cases, cfg.eval)?;
    let client = if cfg.evolve.external_mutation {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| Failure::input("external mutation needs an `endpoint` config section"))?;
        Some(HttpCompletion::new(endpoint))
    } else {
        None
    };
    let result = evolve(&fitness, &cfg.evolve, client.as_ref().map(|c| c as &dyn Completion))?;
    result.islands.audit()?;

    let dir = &ctx.run_dir;
    let history = dir.join("history.csv");
    write(&history, result.history_csv().as_bytes())?;
    let best = dir.join("best_strategy.json");
    let body = serde_json::to_vec_pretty(&result.best.strategy).or_backend("serializing strategy")?;
    write(&best, &body)?;
    let elites: Vec<Elite> = result
        .islands
        .islands
        .iter()
        .enumerate()
        .flat_map(|(island, a)| {
            a.elites().into_iter().map(move |g| Elite {
                island,
                complexity: g.features.0,
                behavior: g.features.1,
                fitness: g.fitness,
                id: g.lineage.id,
                generation: g.lineage.generation,
                parents: &g.lineage.parents,
                strategy: &g.strategy.name,
            })
        })
        .collect();
    let archive = dir.join("archive.json");
    write(&archive, &serde_json::to_vec_pretty(&elites).or_backend("serializing archive")?)?;

    manifest
        .artifact("history", &history, dir)
        .artifact("best_strategy", &best, dir)
        .artifact("archive", &archive, dir)
        .count("instances", instances as u64)
        .count("iterations", cfg.evolve.iterations as u64)
        .count("evaluations", result.evaluations as u64)
        .count("external_rejections", result.external_rejections as u64)
        .count("archive_occupancy", result.islands.occupancy() as u64)
        .metric("initial_fitness", result.initial_fitness)
        .metric("best_fitness", result.best.fitness);
    manifest.finish(dir, &file_name("evolve", None))?;

    println!("initial_fitness {}", result.initial_fitness);
    println!("best_fitness {}", result.best.fitness);
    println!("best_strategy {}", best.display());
    Ok(())
}
