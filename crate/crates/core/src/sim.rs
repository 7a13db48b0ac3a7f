//! Synthetic worlds with known ground truth.
//!
//! Each world draws which solutions are truly correct and which tests are
//! truly valid, then samples the pass grid from those bits. The annotated
//! suite of a simulated instance is the correctness bit itself, so the
//! evaluator's criteria are exact here.
//!
//! Every draw is addressed by `(rng_seed, instance, row, col)` through the
//! ChaCha block counter. Sampling is therefore independent of evaluation
//! order and of `m`/`n`: a larger world contains the smaller one as its
//! top-left block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::{consistency_of_cases, Case, EvalConfig};
use crate::matrix::{BoolMatrix, PassMatrix};
use crate::par;
use crate::strategy::Scorer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Solutions per problem.
    pub m: usize,
    /// Tests per problem.
    pub n: usize,
    /// P(solution correct).
    pub q: f64,
    /// P(test valid).
    pub v: f64,
    /// P(valid test fails an incorrect solution).
    pub d: f64,
    /// P(invalid test fails any solution).
    pub r: f64,
    /// P(valid test wrongly fails a correct solution).
    pub flake: f64,
    pub instances: usize,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig::benchmark(200, 0)
    }
}

impl SimConfig {
    /// The reference scenario used by benchmarks and acceptance checks.
    pub fn benchmark(instances: usize, rng_seed: u64) -> Self {
        SimConfig {
            m: 16,
            n: 16,
            q: 0.5,
            v: 0.7,
            d: 0.9,
            r: 0.5,
            flake: 0.02,
            instances,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("q", self.q), ("v", self.v), ("d", self.d), ("r", self.r), ("flake", self.flake)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        if self.m < 2 {
            return Err(Error::Config(format!("m = {} must be at least 2", self.m)));
        }
        if self.n < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.instances < 1 {
            return Err(Error::Config("instances must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentWorld {
    pub index: usize,
    pub correct: Vec<bool>,
    pub valid: Vec<bool>,
    pub grid: BoolMatrix,
    /// Synthetic annotated-suite verdict per solution.
    pub annotated_row_truth: Vec<bool>,
}

impl LatentWorld {
    pub fn id(&self) -> String {
        format!("world-{:05}", self.index)
    }

    pub fn matrix(&self) -> PassMatrix {
        PassMatrix::from_bools(self.id(), &self.grid)
    }

    pub fn case(&self) -> Case {
        Case::new(self.id(), self.grid.clone(), self.annotated_row_truth.clone())
    }

    /// The leading `m` solutions and `n` tests; identical to sampling with
    /// those dimensions directly.
    pub fn truncate(&self, m: usize, n: usize) -> LatentWorld {
        LatentWorld {
            index: self.index,
            correct: self.correct[..m].to_vec(),
            valid: self.valid[..n].to_vec(),
            grid: self.grid.top_left(m, n),
            annotated_row_truth: self.annotated_row_truth[..m].to_vec(),
        }
    }
}

/// Uniform draws addressed by grid position.
struct CellStream {
    rng: ChaCha8Rng,
}

impl CellStream {
    fn new(seed: u64, instance: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(instance as u64);
        CellStream { rng }
    }

    /// Row 0 and column 0 are reserved for per-test and per-solution bits.
    fn uniform(&mut self, row: usize, col: usize) -> f64 {
        let slot = ((row as u128) << 32) | col as u128;
        // Four 32-bit words per slot; one f64 consumes two.
        self.rng.set_word_pos(slot << 2);
        self.rng.random::<f64>()
    }
}

pub fn sample_world(config: &SimConfig, instance_index: usize) -> LatentWorld {
    let mut stream = CellStream::new(config.rng_seed, instance_index);
    let correct: Vec<bool> = (0..config.m).map(|i| stream.uniform(i + 1, 0) < config.q).collect();
    let valid: Vec<bool> = (0..config.n).map(|j| stream.uniform(0, j + 1) < config.v).collect();
    let mut grid = BoolMatrix::filled(config.m, config.n, false);
    for (i, &ok) in correct.iter().enumerate() {
        for (j, &good) in valid.iter().enumerate() {
            let p_pass = match (good, ok) {
                (true, true) => 1.0 - config.flake,
                (true, false) => 1.0 - config.d,
                (false, _) => 1.0 - config.r,
            };
            grid.set(i, j, stream.uniform(i + 1, j + 1) < p_pass);
        }
    }
    LatentWorld {
        index: instance_index,
        annotated_row_truth: correct.clone(),
        correct,
        valid,
        grid,
    }
}

/// Samples `config.instances` worlds in parallel, in index order.
pub fn sample_worlds(config: &SimConfig) -> Result<Vec<LatentWorld>> {
    config.validate()?;
    Ok(par::map_range(config.instances, |i| sample_world(config, i)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyQuality {
    /// Fraction of worlds whose top-ranked solution is truly correct.
    pub top1_correct_rate: f64,
    /// Fraction of worlds whose top-ranked test is truly valid.
    pub best_test_valid_rate: f64,
    /// Consistency score with the correctness bits as the annotated suite.
    pub consistency_vs_truth: f64,
}

pub fn strategy_quality(scorer: &dyn Scorer, worlds: &[LatentWorld], config: &EvalConfig) -> Result<StrategyQuality> {
    if worlds.is_empty() {
        return Err(Error::Malformed("strategy quality needs at least one world".into()));
    }
    let hits = par::map(worlds, |w| match scorer.score(&w.grid) {
        Ok(out) => (w.correct[out.best_solution()], w.valid[out.best_test()]),
        Err(_) => (false, false),
    });
    let cases: Vec<Case> = worlds.iter().map(LatentWorld::case).collect();
    let report = consistency_of_cases(scorer, &cases, config)?;
    let total = worlds.len() as f64;
    Ok(StrategyQuality {
        top1_correct_rate: hits.iter().filter(|h| h.0).count() as f64 / total,
        best_test_valid_rate: hits.iter().filter(|h| h.1).count() as f64 / total,
        consistency_vs_truth: report.score,
    })
}
