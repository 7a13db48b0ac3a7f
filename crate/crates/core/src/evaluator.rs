//! Consistency evaluation of strategies against annotated seed data.
//!
//! An instance is satisfied when the strategy's top solution passes the
//! annotated suite (criterion 1) and each of the top-k and bottom-k
//! solutions behaves the same on the annotated suite as on the strategy's
//! best test (criterion 2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{binarize, BoolMatrix};
use crate::model::{Outcome, SeedInstance};
use crate::par;
use crate::strategy::{Scorer, StrategyOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k: usize,
    pub use_criterion1: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k: 1,
            use_criterion1: true,
        }
    }
}

impl EvalConfig {
    /// Logical executions charged per instance: each of the 2k extreme
    /// solutions is checked once against the annotated suite and once
    /// against the best test.
    pub fn exec_per_instance(&self) -> u64 {
        4 * self.k as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub criterion1: bool,
    pub criterion2: bool,
    pub satisfied: bool,
    pub exec_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub per_instance: Vec<InstanceResult>,
    pub score: f64,
    pub total_exec: u64,
}

impl ConsistencyReport {
    fn from_results(per_instance: Vec<InstanceResult>) -> Self {
        let satisfied = per_instance.iter().filter(|r| r.satisfied).count();
        let score = satisfied as f64 / per_instance.len() as f64;
        let total_exec = per_instance.iter().map(|r| r.exec_count).sum();
        ConsistencyReport {
            per_instance,
            score,
            total_exec,
        }
    }

    pub fn satisfied(&self) -> usize {
        self.per_instance.iter().filter(|r| r.satisfied).count()
    }

    pub fn criterion1_failures(&self) -> usize {
        self.per_instance.iter().filter(|r| !r.criterion1).count()
    }

    pub fn criterion2_failures(&self) -> usize {
        self.per_instance.iter().filter(|r| !r.criterion2).count()
    }

    pub fn faults(&self) -> usize {
        self.per_instance.iter().filter(|r| r.fault.is_some()).count()
    }
}

/// True iff every annotated test passed. An empty suite never passes.
pub fn passes_annotated(row: &[Outcome]) -> bool {
    !row.is_empty() && row.iter().all(Outcome::is_pass)
}

/// Top-ranked solution passes the annotated suite.
pub fn criterion1(output: &StrategyOutput, instance: &SeedInstance) -> bool {
    passes_annotated(instance.annotated_matrix.row(output.best_solution()))
}

/// Every solution among the top-k and bottom-k agrees between the
/// annotated suite and the best-ranked test.
pub fn criterion2(output: &StrategyOutput, instance: &SeedInstance, k: usize) -> bool {
    let best_test = output.best_test();
    extremes(&output.solution_ranking, k).all(|s| {
        passes_annotated(instance.annotated_matrix.row(s)) == instance.generated_matrix.cell(s, best_test).is_pass()
    })
}

fn extremes(ranking: &[usize], k: usize) -> impl Iterator<Item = usize> + '_ {
    let k = k.min(ranking.len());
    ranking[..k].iter().chain(&ranking[ranking.len() - k..]).copied()
}

/// One instance reduced to what the criteria need: the binarized candidate
/// grid and each solution's annotated-suite verdict, computed once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Case {
    pub id: String,
    pub grid: BoolMatrix,
    pub annotated: Vec<bool>,
}

impl Case {
    pub fn new(id: impl Into<String>, grid: BoolMatrix, annotated: Vec<bool>) -> Self {
        assert_eq!(grid.rows(), annotated.len(), "one annotated verdict per solution");
        Case {
            id: id.into(),
            grid,
            annotated,
        }
    }

    pub fn from_seed(seed: &SeedInstance) -> Self {
        let annotated = (0..seed.annotated_matrix.rows())
            .map(|s| passes_annotated(seed.annotated_matrix.row(s)))
            .collect();
        Case::new(seed.id(), binarize(&seed.generated_matrix), annotated)
    }

    fn check(&self, config: &EvalConfig) -> Result<()> {
        if config.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if 2 * config.k > self.grid.rows() {
            return Err(Error::Config(format!(
                "instance `{}` has {} solutions, fewer than 2k = {}",
                self.id,
                self.grid.rows(),
                2 * config.k
            )));
        }
        Ok(())
    }

    pub fn criterion1(&self, output: &StrategyOutput) -> bool {
        self.annotated[output.best_solution()]
    }

    pub fn criterion2(&self, output: &StrategyOutput, k: usize) -> bool {
        let best_test = output.best_test();
        extremes(&output.solution_ranking, k).all(|s| self.annotated[s] == self.grid.get(s, best_test))
    }

    pub fn evaluate(&self, scorer: &dyn Scorer, config: &EvalConfig) -> InstanceResult {
        let exec_count = config.exec_per_instance();
        match scorer.score(&self.grid) {
            Ok(output) => {
                let c1 = self.criterion1(&output);
                let c2 = self.criterion2(&output, config.k);
                InstanceResult {
                    instance_id: self.id.clone(),
                    criterion1: c1,
                    criterion2: c2,
                    satisfied: c2 && (c1 || !config.use_criterion1),
                    exec_count,
                    fault: None,
                }
            }
            Err(err) => InstanceResult {
                instance_id: self.id.clone(),
                criterion1: false,
                criterion2: false,
                satisfied: false,
                exec_count,
                fault: Some(err.to_string()),
            },
        }
    }
}

/// Scores `scorer` on prepared cases. Instances are evaluated in parallel;
/// the report lists them in input order.
pub fn consistency_of_cases(scorer: &dyn Scorer, cases: &[Case], config: &EvalConfig) -> Result<ConsistencyReport> {
    if cases.is_empty() {
        return Err(Error::Malformed("consistency evaluation needs at least one instance".into()));
    }
    for case in cases {
        case.check(config)?;
    }
    let results = par::map(cases, |case| case.evaluate(scorer, config));
    Ok(ConsistencyReport::from_results(results))
}

pub fn consistency_score(scorer: &dyn Scorer, seeds: &[SeedInstance], config: &EvalConfig) -> Result<ConsistencyReport> {
    let cases: Vec<Case> = seeds.iter().map(Case::from_seed).collect();
    consistency_of_cases(scorer, &cases, config)
}
