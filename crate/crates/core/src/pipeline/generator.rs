//! Sources of problems, candidate solutions and candidate tests.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::client::{extract_block, Completion};
use crate::error::{Error, Result};
use crate::harness::ExecutionBackend;
use crate::matrix::PassMatrix;
use crate::model::{Origin, Problem, SeedInstance, Solution, TestPayload};
use crate::par;
use crate::sim::{sample_worlds, LatentWorld, SimConfig};

pub const PROBLEM_TEMPLATE: &str = include_str!("../../assets/prompts/generate_problem.txt");
pub const SOLUTION_TEMPLATE: &str = include_str!("../../assets/prompts/generate_solution.txt");
pub const TESTS_TEMPLATE: &str = include_str!("../../assets/prompts/generate_tests.txt");

/// A test as handed over by a generator, before execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestDraft {
    /// A ready-made test.
    Artifact(TestPayload),
    /// A program that prints a JSON list of `{"input", "expected"}` pairs;
    /// each pair becomes an `io_pair` test.
    Generator { generator: String },
}

/// Items obtained plus the number of requests that produced nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub items: Vec<T>,
    pub failures: usize,
}

pub trait GeneratorClient: Sync {
    fn generate_problems(&self, seeds: &[SeedInstance], count: usize) -> Result<Batch<Problem>>;
    /// Up to `m` candidate solutions, `sample_index` in draw order.
    fn generate_solutions(&self, problem: &Problem, m: usize) -> Result<Vec<Solution>>;
    /// Up to `n` tests' worth of drafts.
    fn generate_tests(&self, problem: &Problem, n: usize) -> Result<Vec<TestDraft>>;
}

fn check_count(count: usize) -> Result<()> {
    if count == 0 {
        return Err(Error::Config("problem count must be at least 1".into()));
    }
    Ok(())
}

fn solution(problem: &Problem, index: usize, payload: String) -> Solution {
    Solution {
        id: format!("{}-s{index}", problem.id),
        problem_id: problem.id.clone(),
        payload,
        sample_index: index,
    }
}

/// One problem per `*.json` file in a directory, read in file-name order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureProblem {
    pub id: String,
    pub statement: String,
    pub solutions: Vec<String>,
    pub tests: Vec<TestDraft>,
}

/// Fully offline generator backed by fixture files.
#[derive(Debug, Clone)]
pub struct FixtureClient {
    problems: Vec<FixtureProblem>,
    by_id: HashMap<String, usize>,
}

impl FixtureClient {
    pub fn load(dir: &Path) -> Result<Self> {
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut problems = Vec::with_capacity(paths.len());
        for p in paths {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            let fixture: FixtureProblem = serde_json::from_str(&text)
                .map_err(|e| Error::Malformed(format!("{}: {e}", p.display())))?;
            problems.push(fixture);
        }
        FixtureClient::new(problems)
    }

    pub fn new(problems: Vec<FixtureProblem>) -> Result<Self> {
        let mut by_id = HashMap::new();
        for (i, p) in problems.iter().enumerate() {
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(p.id.clone()));
            }
        }
        Ok(FixtureClient { problems, by_id })
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    fn find(&self, problem: &Problem) -> Result<&FixtureProblem> {
        self.by_id
            .get(&problem.id)
            .map(|&i| &self.problems[i])
            .ok_or_else(|| Error::Malformed(format!("no fixture for problem {}", problem.id)))
    }
}

impl GeneratorClient for FixtureClient {
    fn generate_problems(&self, _seeds: &[SeedInstance], count: usize) -> Result<Batch<Problem>> {
        check_count(count)?;
        let items = self
            .problems
            .iter()
            .take(count)
            .map(|f| Problem::new(f.id.clone(), f.statement.clone(), Origin::Synthesized))
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch {
            failures: count - items.len(),
            items,
        })
    }

    fn generate_solutions(&self, problem: &Problem, m: usize) -> Result<Vec<Solution>> {
        let f = self.find(problem)?;
        Ok(f.solutions.iter().take(m).enumerate().map(|(i, s)| solution(problem, i, s.clone())).collect())
    }

    fn generate_tests(&self, problem: &Problem, n: usize) -> Result<Vec<TestDraft>> {
        Ok(self.find(problem)?.tests.iter().take(n).cloned().collect())
    }
}

/// Generator backed by a text-completion endpoint and the bundled prompts.
pub struct EndpointGenerator<C> {
    client: C,
    rng_seed: u64,
    max_concurrent_requests: usize,
}

impl<C: Completion> EndpointGenerator<C> {
    pub fn new(client: C, rng_seed: u64, max_concurrent_requests: usize) -> Self {
        EndpointGenerator {
            client,
            rng_seed,
            max_concurrent_requests: max_concurrent_requests.max(1),
        }
    }

    /// Per-call seed: distinct for every (purpose, problem, index).
    fn seed(&self, salt: &str, index: usize) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in salt.bytes().chain(index.to_le_bytes()) {
            h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
        }
        h ^ self.rng_seed
    }

    fn fan_out<T: Send>(&self, count: usize, f: impl Fn(usize) -> Option<T> + Sync + Send) -> Vec<Option<T>> {
        par::with_threads(self.max_concurrent_requests, || par::map_range(count, f))
    }
}

pub fn render_seed_examples(seeds: &[SeedInstance]) -> String {
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| format!("Example {}:\n{}", i + 1, s.problem.statement.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

impl<C: Completion> GeneratorClient for EndpointGenerator<C> {
    fn generate_problems(&self, seeds: &[SeedInstance], count: usize) -> Result<Batch<Problem>> {
        check_count(count)?;
        let prompt = PROBLEM_TEMPLATE.replace("{seed_examples}", &render_seed_examples(seeds));
        let replies = self.fan_out(count, |i| match self.client.complete(&prompt, self.seed("problem", i)) {
            Ok(text) if !text.trim().is_empty() => {
                Problem::new(format!("gen-{i:05}"), text.trim(), Origin::Synthesized).ok()
            }
            Ok(_) => {
                tracing::warn!(index = i, "empty problem reply");
                None
            }
            Err(e) => {
                tracing::warn!(index = i, error = %e, "problem request failed");
                None
            }
        });
        let failures = replies.iter().filter(|r| r.is_none()).count();
        Ok(Batch {
            items: replies.into_iter().flatten().collect(),
            failures,
        })
    }

    fn generate_solutions(&self, problem: &Problem, m: usize) -> Result<Vec<Solution>> {
        let prompt = SOLUTION_TEMPLATE.replace("{problem}", &problem.statement);
        let replies = self.fan_out(m, |i| match self.client.complete(&prompt, self.seed(&problem.id, i)) {
            Ok(text) => Some(extract_block(&text).to_string()),
            Err(e) => {
                tracing::warn!(problem = %problem.id, index = i, error = %e, "solution request failed");
                None
            }
        });
        Ok(replies
            .into_iter()
            .enumerate()
            .filter_map(|(i, r)| r.map(|code| solution(problem, i, code)))
            .collect())
    }

    fn generate_tests(&self, problem: &Problem, n: usize) -> Result<Vec<TestDraft>> {
        let prompt = TESTS_TEMPLATE
            .replace("{problem}", &problem.statement)
            .replace("{m}", &n.to_string());
        match self.client.complete(&prompt, self.seed(&format!("{}-tests", problem.id), 0)) {
            Ok(text) => Ok(vec![TestDraft::Generator {
                generator: extract_block(&text).to_string(),
            }]),
            Err(e) => {
                tracing::warn!(problem = %problem.id, error = %e, "test request failed");
                Ok(Vec::new())
            }
        }
    }
}

/// Simulated problems whose pass grids come from latent worlds. Pair it
/// with [`SimGenerator::backend`] to execute.
pub struct SimGenerator {
    worlds: Vec<LatentWorld>,
}

impl SimGenerator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        Ok(SimGenerator {
            worlds: sample_worlds(config)?,
        })
    }

    pub fn from_worlds(worlds: Vec<LatentWorld>) -> Self {
        SimGenerator { worlds }
    }

    /// The same worlds cut down to their leading `m` solutions and `n` tests.
    pub fn truncated(&self, m: usize, n: usize) -> SimGenerator {
        SimGenerator {
            worlds: self.worlds.iter().map(|w| w.truncate(m, n)).collect(),
        }
    }

    /// Table backend holding every world's grid under the ids this
    /// generator hands out.
    pub fn backend(&self) -> ExecutionBackend {
        let grids = self
            .worlds
            .iter()
            .map(|w| {
                let generic = w.matrix();
                let pid = w.id();
                PassMatrix::new(
                    pid.clone(),
                    (0..w.grid.rows()).map(|i| format!("{pid}-s{i}")).collect(),
                    (0..w.grid.cols()).map(|j| format!("{pid}-t{j}")).collect(),
                    generic.cells().to_vec(),
                )
                .expect("generated ids are unique")
            })
            .collect();
        ExecutionBackend::Table { grids }
    }

    fn world(&self, problem: &Problem) -> Result<&LatentWorld> {
        self.worlds
            .iter()
            .find(|w| w.id() == problem.id)
            .ok_or_else(|| Error::Malformed(format!("no simulated world {}", problem.id)))
    }
}

impl GeneratorClient for SimGenerator {
    fn generate_problems(&self, _seeds: &[SeedInstance], count: usize) -> Result<Batch<Problem>> {
        check_count(count)?;
        let items = self
            .worlds
            .iter()
            .take(count)
            .map(|w| Problem::new(w.id(), format!("simulated problem {}", w.id()), Origin::Synthesized))
            .collect::<Result<Vec<_>>>()?;
        Ok(Batch {
            failures: count - items.len(),
            items,
        })
    }

    fn generate_solutions(&self, problem: &Problem, m: usize) -> Result<Vec<Solution>> {
        let w = self.world(problem)?;
        Ok((0..m.min(w.grid.rows()))
            .map(|i| solution(problem, i, format!("candidate {i}")))
            .collect())
    }

    fn generate_tests(&self, problem: &Problem, n: usize) -> Result<Vec<TestDraft>> {
        let w = self.world(problem)?;
        Ok((0..n.min(w.grid.cols()))
            .map(|j| {
                TestDraft::Artifact(TestPayload::IoPair {
                    input: format!("{j}"),
                    expected: String::new(),
                })
            })
            .collect())
    }
}
