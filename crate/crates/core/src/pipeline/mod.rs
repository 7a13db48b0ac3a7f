//! Data synthesis: generate problems, deduplicate, cross-execute candidate
//! solutions and tests, rank with a strategy, prune uninformative instances
//! and export JSONL.

pub mod dedupe;
pub mod generator;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::Harness;
use crate::matrix::PassMatrix;
use crate::model::{Problem, SeedInstance, Solution, TestArtifact, TestPayload};
use crate::par;
use crate::strategy::{Strategy, StrategyOutput};

pub use dedupe::dedupe;
pub use generator::{Batch, EndpointGenerator, FixtureClient, FixtureProblem, GeneratorClient, SimGenerator, TestDraft};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub m: usize,
    pub n: usize,
    /// Number of problems requested from the generator.
    pub problems: usize,
    pub dedupe_threshold: f64,
    /// Drop instances whose test scores are all equal.
    pub prune: bool,
    pub parallelism: usize,
    pub rng_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            m: 16,
            n: 16,
            problems: 16,
            dedupe_threshold: 0.7,
            prune: true,
            parallelism: par::available_threads(),
            rng_seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Config(format!("m = {} must be at least 2", self.m)));
        }
        if self.n < 1 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.problems < 1 {
            return Err(Error::Config("problem count must be at least 1".into()));
        }
        if !(self.dedupe_threshold > 0.0 && self.dedupe_threshold <= 1.0) {
            return Err(Error::Config(format!("dedupe threshold {} is outside (0, 1]", self.dedupe_threshold)));
        }
        Ok(())
    }
}

/// A problem with its executed candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub problem: Problem,
    /// In `sample_index` order, matching the matrix rows.
    pub solutions: Vec<Solution>,
    pub tests: Vec<TestArtifact>,
    pub matrix: PassMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synthesis {
    Ready(Instance),
    Degenerate { problem_id: String, reason: String },
}

fn degenerate(problem: &Problem, reason: impl Into<String>) -> Synthesis {
    let reason = reason.into();
    tracing::info!(problem = %problem.id, %reason, "skipping degenerate instance");
    Synthesis::Degenerate {
        problem_id: problem.id.clone(),
        reason,
    }
}

/// Requests candidates for one problem and executes them on the ambient
/// worker pool. Generator trouble makes the instance degenerate; harness
/// errors are returned.
pub fn synthesize_instance(
    problem: &Problem,
    config: &PipelineConfig,
    client: &dyn GeneratorClient,
    harness: &Harness,
) -> Result<Synthesis> {
    let mut solutions = match client.generate_solutions(problem, config.m) {
        Ok(s) => s,
        Err(e) => return Ok(degenerate(problem, format!("solution generation failed: {e}"))),
    };
    solutions.truncate(config.m);
    let distinct: std::collections::HashSet<&str> = solutions.iter().map(|s| s.payload.as_str()).collect();
    if distinct.len() < 2 {
        return Ok(degenerate(problem, format!("{} distinct solution(s), need 2", distinct.len())));
    }

    let drafts = match client.generate_tests(problem, config.n) {
        Ok(d) => d,
        Err(e) => return Ok(degenerate(problem, format!("test generation failed: {e}"))),
    };
    let mut payloads = Vec::new();
    for draft in drafts {
        match draft {
            TestDraft::Artifact(p) => payloads.push(p),
            TestDraft::Generator { generator } => match harness.materialize_generated(&generator) {
                Ok(pairs) => payloads.extend(
                    pairs
                        .into_iter()
                        .map(|(input, expected)| TestPayload::IoPair { input, expected }),
                ),
                Err(e) => tracing::warn!(problem = %problem.id, error = %e, "test generator produced nothing"),
            },
        }
    }
    payloads.truncate(config.n);
    if payloads.is_empty() {
        return Ok(degenerate(problem, "no tests obtained"));
    }
    let tests: Vec<TestArtifact> = payloads
        .into_iter()
        .enumerate()
        .map(|(j, payload)| TestArtifact {
            id: format!("{}-t{j}", problem.id),
            problem_id: problem.id.clone(),
            payload,
            annotated: false,
        })
        .collect();

    let matrix = harness.cross_execute(&problem.id, &solutions, &tests)?;
    solutions.sort_by_key(|s| s.sample_index);
    Ok(Synthesis::Ready(Instance {
        problem: problem.clone(),
        solutions,
        tests,
        matrix,
    }))
}

/// Keep an instance only if its test scores vary.
pub fn zero_variance_prune(output: &StrategyOutput) -> bool {
    !output.is_zero_variance()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub m: usize,
    pub n: usize,
    pub rng_seed: u64,
    pub strategy_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub problem: Problem,
    /// Tests the best solution passes, best-ranked first.
    pub tests: Vec<TestArtifact>,
    pub best_solution: Solution,
    pub strategy_name: String,
    pub scores: StrategyOutput,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub problem_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assembly {
    /// Sorted by problem id.
    pub records: Vec<DatasetRecord>,
    pub dropped: Vec<Dropped>,
}

impl Assembly {
    pub fn mean_retained_tests(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.tests.len()).sum::<usize>() as f64 / self.records.len() as f64
    }
}

/// Ranks every instance with `strategy` and builds the surviving records.
pub fn assemble(instances: &[Instance], strategy: &Strategy, prune: bool, rng_seed: u64) -> Assembly {
    let hash = strategy.fingerprint();
    let mut order: Vec<&Instance> = instances.iter().collect();
    order.sort_by(|a, b| a.problem.id.cmp(&b.problem.id));
    let mut out = Assembly::default();
    for inst in order {
        let drop = |reason: String| {
            tracing::info!(problem = %inst.problem.id, %reason, "instance dropped");
            Dropped {
                problem_id: inst.problem.id.clone(),
                reason,
            }
        };
        let output = match strategy.apply(&inst.matrix) {
            Ok(o) => o,
            Err(e) => {
                out.dropped.push(drop(e.to_string()));
                continue;
            }
        };
        if prune && !zero_variance_prune(&output) {
            out.dropped.push(drop("zero variance in test scores".into()));
            continue;
        }
        let best = output.best_solution();
        let tests: Vec<TestArtifact> = output
            .test_ranking
            .iter()
            .filter(|&&j| inst.matrix.cell(best, j).is_pass())
            .map(|&j| inst.tests[j].clone())
            .collect();
        if tests.is_empty() {
            out.dropped.push(drop("best solution passes no candidate test".into()));
            continue;
        }
        out.records.push(DatasetRecord {
            problem: inst.problem.clone(),
            tests,
            best_solution: inst.solutions[best].clone(),
            strategy_name: strategy.name.clone(),
            provenance: Provenance {
                m: inst.matrix.rows(),
                n: inst.matrix.cols(),
                rng_seed,
                strategy_hash: hash.clone(),
            },
            scores: output,
        });
    }
    out
}

/// Writes one JSON object per line, replacing `path` atomically.
pub fn export(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let mut body = Vec::new();
    for r in records {
        serde_json::to_writer(&mut body, r)?;
        body.push(b'\n');
    }
    write_atomic(path, &body)
}

/// Write-then-rename within the target directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub requested_problems: usize,
    pub generation_failures: usize,
    pub generated_problems: usize,
    pub unique_problems: usize,
    pub degenerate: Vec<Dropped>,
    pub instances: usize,
    pub records: usize,
    pub dropped: Vec<Dropped>,
    pub executions: u64,
    pub mean_retained_tests: f64,
    pub m: usize,
    pub n: usize,
}

pub struct SynthRun {
    pub instances: Vec<Instance>,
    pub assembly: Assembly,
    pub report: SynthReport,
}

/// Generation through assembly. Executions are counted on `harness`, so
/// pass a fresh one to get per-run totals.
pub fn run_synthesis(
    client: &dyn GeneratorClient,
    harness: &Harness,
    strategy: &Strategy,
    seeds: &[SeedInstance],
    config: &PipelineConfig,
) -> Result<SynthRun> {
    config.validate()?;
    let before = harness.invocations();
    let batch = client.generate_problems(seeds, config.problems)?;
    if batch.failures > 0 {
        tracing::warn!(failures = batch.failures, "some problem requests failed");
    }
    let generated = batch.items.len();
    let problems = dedupe(batch.items, config.dedupe_threshold)?;
    let unique = problems.len();

    let outcomes = par::with_threads(config.parallelism, || {
        par::map(&problems, |p| synthesize_instance(p, config, client, harness))
    });
    let mut instances = Vec::new();
    let mut degenerate = Vec::new();
    for o in outcomes {
        match o? {
            Synthesis::Ready(i) => instances.push(i),
            Synthesis::Degenerate { problem_id, reason } => degenerate.push(Dropped { problem_id, reason }),
        }
    }
    let assembly = assemble(&instances, strategy, config.prune, config.rng_seed);
    let report = SynthReport {
        requested_problems: config.problems,
        generation_failures: batch.failures,
        generated_problems: generated,
        unique_problems: unique,
        degenerate,
        instances: instances.len(),
        records: assembly.records.len(),
        dropped: assembly.dropped.clone(),
        executions: harness.invocations() - before,
        mean_retained_tests: assembly.mean_retained_tests(),
        m: config.m,
        n: config.n,
    };
    Ok(SynthRun {
        instances,
        assembly,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetentionRow {
    pub m: usize,
    pub n: usize,
    pub instances: usize,
    pub retained: usize,
    pub executions: u64,
    pub mean_retained_tests: f64,
}

/// Runs the pipeline over simulated problems at each `(m, n)`, reusing the
/// same worlds cut to size so smaller settings see a subset of the draws
/// larger ones see.
pub fn retention_sweep(
    source: &SimGenerator,
    sizes: &[(usize, usize)],
    strategy: &Strategy,
    config: &PipelineConfig,
) -> Result<Vec<RetentionRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &(m, n) in sizes {
        let cut = source.truncated(m, n);
        let harness = Harness::new(cut.backend(), Default::default())?;
        let cfg = PipelineConfig { m, n, ..config.clone() };
        let run = run_synthesis(&cut, &harness, strategy, &[], &cfg)?;
        rows.push(RetentionRow {
            m,
            n,
            instances: run.report.instances,
            retained: run.report.records,
            executions: run.report.executions,
            mean_retained_tests: run.report.mean_retained_tests,
        });
    }
    Ok(rows)
}
