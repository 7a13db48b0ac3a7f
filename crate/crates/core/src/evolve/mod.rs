//! Quality-diversity search over strategies.
//!
//! Each island keeps a MAP-Elites [`Archive`] keyed by expression size and
//! behavioral distance from the initial strategy. Every generation each
//! island draws parents uniformly from its elites, breeds offspring, and
//! inserts the ones that beat their cell's incumbent. Islands exchange their
//! best elites around a ring at a fixed interval.
//!
//! Offspring are bred from an RNG keyed by `(rng_seed, generation, island)`
//! and evaluated in parallel; insertion happens afterwards in a fixed order.
//! Without the external mutator a run is a pure function of its inputs.

pub mod archive;
pub mod external;
pub mod features;
pub mod mutate;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::client::Completion;
use crate::error::{Error, Result};
use crate::evaluator::{consistency_of_cases, Case, EvalConfig};
use crate::model::SeedInstance;
use crate::par;
use crate::sim::LatentWorld;
use crate::strategy::{Builtin, Strategy};

pub use archive::{Archive, Genome, Insertion, IslandSet, Lineage, Migration};
pub use external::{external_mutate, mutation_prompt, Rejection};
pub use features::{behavior_bucket, complexity_bucket, kendall_distance, ProbeSet};
pub use mutate::{crossover, mutate, random_tree, MutationWeights};

/// Scores a strategy in `[0, 1]`.
pub trait FitnessSource: Sync {
    fn fitness(&self, strategy: &Strategy) -> Result<f64>;
}

/// Consistency score over a fixed list of evaluation cases: annotated seed
/// instances, or simulated worlds judged against their ground truth.
pub struct CaseFitness {
    cases: Vec<Case>,
    config: EvalConfig,
}

impl CaseFitness {
    pub fn new(cases: Vec<Case>, config: EvalConfig) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Config("fitness source has no cases".into()));
        }
        Ok(CaseFitness { cases, config })
    }

    pub fn from_seeds(seeds: &[SeedInstance], config: EvalConfig) -> Result<Self> {
        CaseFitness::new(seeds.iter().map(Case::from_seed).collect(), config)
    }

    pub fn from_worlds(worlds: &[LatentWorld], config: EvalConfig) -> Result<Self> {
        CaseFitness::new(worlds.iter().map(LatentWorld::case).collect(), config)
    }
}

impl FitnessSource for CaseFitness {
    fn fitness(&self, strategy: &Strategy) -> Result<f64> {
        Ok(consistency_of_cases(strategy, &self.cases, &self.config)?.score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveConfig {
    pub iterations: usize,
    pub islands: usize,
    pub migration_interval: usize,
    pub offspring_per_iteration: usize,
    pub rng_seed: u64,
    pub weights: MutationWeights,
    /// Probability that an offspring comes from crossover with a second elite.
    pub crossover_rate: f64,
    /// Replace one offspring per island per generation with an external proposal.
    pub external_mutation: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            iterations: 20,
            islands: 4,
            migration_interval: 5,
            offspring_per_iteration: 8,
            rng_seed: 0,
            weights: MutationWeights::default(),
            crossover_rate: 0.25,
            external_mutation: false,
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.offspring_per_iteration == 0 {
            return Err(Error::Config("offspring per iteration must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!("crossover rate {} is not a probability", self.crossover_rate)));
        }
        // Island count and interval are checked by IslandSet::new.
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub best_fitness: f64,
    pub mean_elite_fitness: f64,
    pub archive_occupancy: usize,
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub best: Genome,
    pub initial_fitness: f64,
    pub history: Vec<HistoryRow>,
    pub islands: IslandSet,
    pub evaluations: usize,
    pub external_rejections: usize,
    pub migrations: Vec<Migration>,
}

impl EvolveResult {
    /// History as CSV with a header row.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,best_fitness,mean_elite_fitness,archive_occupancy\n");
        for r in &self.history {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration, r.best_fitness, r.mean_elite_fitness, r.archive_occupancy
            ));
        }
        out
    }
}

struct Candidate {
    island: usize,
    strategy: Strategy,
    parents: Vec<u64>,
}

fn rng_for(seed: u64, generation: usize, island: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | island as u64);
    rng
}

fn score(fitness: &dyn FitnessSource, strategy: &Strategy) -> f64 {
    match fitness.fitness(strategy) {
        Ok(f) if f.is_finite() => f.clamp(0.0, 1.0),
        Ok(_) => 0.0,
        Err(e) => {
            tracing::debug!(strategy = %strategy.name, error = %e, "offspring fitness failed");
            0.0
        }
    }
}

/// Runs the search. `external` is consulted only when
/// `config.external_mutation` is set, and must be present then.
pub fn evolve(
    fitness: &dyn FitnessSource,
    config: &EvolveConfig,
    external: Option<&dyn Completion>,
) -> Result<EvolveResult> {
    config.validate()?;
    let mut islands = IslandSet::new(config.islands, config.migration_interval)?;
    let external = match (config.external_mutation, external) {
        (true, None) => return Err(Error::Config("external mutation enabled without a client".into())),
        (true, Some(c)) => Some(c),
        (false, _) => None,
    };
    let probes = ProbeSet::standard();

    let initial = Builtin::Initial.strategy();
    let initial_fitness = fitness.fitness(&initial)?;
    let root = Genome {
        features: probes.features_of(&initial),
        fitness: initial_fitness.clamp(0.0, 1.0),
        strategy: initial,
        lineage: Lineage { id: 0, parents: Vec::new(), generation: 0 },
    };
    for island in &mut islands.islands {
        island.insert(root.clone());
    }
    let mut best = root;
    let mut next_id = 1u64;
    let mut history = Vec::with_capacity(config.iterations);
    let mut migrations = Vec::new();
    let mut evaluations = 1usize;
    let mut external_rejections = 0usize;
    let mut running: Vec<f64> = vec![best.fitness];

    for generation in 1..=config.iterations {
        let mut candidates = Vec::new();
        for (index, island) in islands.islands.iter().enumerate() {
            let mut rng = rng_for(config.rng_seed, generation, index);
            let elites = island.elites();
            for slot in 0..config.offspring_per_iteration {
                let parent = elites[rng.random_range(0..elites.len())];
                let draw: f64 = rng.random();
                if slot == 0 {
                    if let Some(client) = external {
                        let seed = config.rng_seed ^ ((generation as u64) << 32) ^ index as u64;
                        match external_mutate(&parent.strategy, &running, client, seed) {
                            Ok(s) => candidates.push(Candidate {
                                island: index,
                                strategy: s,
                                parents: vec![parent.lineage.id],
                            }),
                            Err(e) => {
                                tracing::warn!(generation, island = index, cause = %e, "external proposal rejected");
                                external_rejections += 1;
                            }
                        }
                        continue;
                    }
                }
                let (strategy, parents) = if elites.len() > 1 && draw < config.crossover_rate {
                    let donor = elites[rng.random_range(0..elites.len())];
                    (
                        crossover(&parent.strategy, &donor.strategy, &mut rng),
                        vec![parent.lineage.id, donor.lineage.id],
                    )
                } else {
                    (mutate(&parent.strategy, &mut rng, &config.weights), vec![parent.lineage.id])
                };
                candidates.push(Candidate { island: index, strategy, parents });
            }
        }

        let (island_of, mut genomes): (Vec<usize>, Vec<Genome>) = candidates
            .into_iter()
            .map(|c| {
                let id = next_id;
                next_id += 1;
                let mut strategy = c.strategy;
                strategy.name = format!("evolved-{id}");
                strategy.meta = json!({"generation": generation, "parents": c.parents, "island": c.island});
                let genome = Genome {
                    strategy,
                    fitness: 0.0,
                    features: (0, 0),
                    lineage: Lineage { id, parents: c.parents, generation },
                };
                (c.island, genome)
            })
            .unzip();
        let scored = par::map(&genomes, |g| (score(fitness, &g.strategy), probes.features_of(&g.strategy)));
        evaluations += genomes.len();
        for ((g, (f, feat)), island) in genomes.iter_mut().zip(scored).zip(island_of) {
            g.fitness = f;
            g.features = feat;
            if g.fitness > best.fitness {
                best = g.clone();
            }
            islands.islands[island].insert(g.clone());
        }

        let m = islands.migrate(generation);
        if m.attempts > 0 {
            migrations.push(m);
        }
        running.push(best.fitness);
        history.push(HistoryRow {
            iteration: generation,
            best_fitness: best.fitness,
            mean_elite_fitness: islands.mean_elite_fitness(),
            archive_occupancy: islands.occupancy(),
        });
        tracing::info!(generation, best = best.fitness, occupancy = islands.occupancy(), "generation done");
    }

    Ok(EvolveResult {
        best,
        initial_fitness,
        history,
        islands,
        evaluations,
        external_rejections,
        migrations,
    })
}
