//! Cross-execution of candidate solutions against candidate tests.
//!
//! A [`Harness`] runs one (solution, test) pair at a time through an
//! [`ExecutionBackend`] and never panics on bad input: anything that keeps a
//! pair from executing becomes an `error` outcome with a detail message.
//! [`Harness::build_pass_matrix`] fans the pairs out over a bounded pool and
//! places every outcome at its (solution, test) coordinate, so the matrix does
//! not depend on completion order.

mod process;

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_unique, PassMatrix};
use crate::model::{Outcome, Solution, TestArtifact, TestPayload};
use crate::par;
use process::{ProcResult, ProcStatus, Run};

/// Placeholder substituted with the absolute path of the solution file.
pub const SOLUTION_FILE: &str = "{solution_file}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub wall_timeout_ms: u64,
    pub memory_cap_bytes: u64,
    pub output_cap_bytes: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            wall_timeout_ms: 2_000,
            memory_cap_bytes: 512 << 20,
            output_cap_bytes: 16 << 20,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<()> {
        if self.wall_timeout_ms == 0 || self.memory_cap_bytes == 0 || self.output_cap_bytes == 0 {
            return Err(Error::Config("execution limits must all be positive".into()));
        }
        Ok(())
    }
}

/// How a (solution, test) pair is executed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecutionBackend {
    /// Runs the solution as `interpreter` with [`SOLUTION_FILE`] substituted,
    /// for `io_pair` and `checker_program` tests.
    IoJudge { interpreter: Vec<String> },
    /// Runs `command_script` tests in a fresh directory created under
    /// `workdir_prefix` (the system temp dir when `None`).
    Command {
        #[serde(default)]
        workdir_prefix: Option<String>,
    },
    /// Looks outcomes up in precomputed grids, one per problem, keyed by
    /// solution and test id.
    Table { grids: Vec<PassMatrix> },
}

impl ExecutionBackend {
    /// `sh {solution_file}`.
    pub fn shell_judge() -> Self {
        ExecutionBackend::IoJudge {
            interpreter: vec!["sh".into(), SOLUTION_FILE.into()],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExecutionBackend::IoJudge { .. } => "io_judge",
            ExecutionBackend::Command { .. } => "command",
            ExecutionBackend::Table { .. } => "table",
        }
    }
}

pub struct Harness {
    backend: ExecutionBackend,
    limits: Limits,
    invocations: AtomicU64,
    tables: HashMap<String, usize>,
}

impl Harness {
    pub fn new(backend: ExecutionBackend, limits: Limits) -> Result<Self> {
        limits.validate()?;
        if let ExecutionBackend::IoJudge { interpreter } = &backend {
            if interpreter.is_empty() {
                return Err(Error::Config("io_judge interpreter is empty".into()));
            }
        }
        let mut tables = HashMap::new();
        if let ExecutionBackend::Table { grids } = &backend {
            for (i, g) in grids.iter().enumerate() {
                if tables.insert(g.problem_id.clone(), i).is_some() {
                    return Err(Error::DuplicateId(g.problem_id.clone()));
                }
            }
        }
        Ok(Harness {
            backend,
            limits,
            invocations: AtomicU64::new(0),
            tables,
        })
    }

    pub fn backend(&self) -> &ExecutionBackend {
        &self.backend
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    /// Number of `run_pair` calls made so far.
    pub fn invocations(&self) -> u64 {
        self.invocations.load(Ordering::Relaxed)
    }

    /// Executes one pair. Failures to execute are reported as `error`.
    pub fn run_pair(&self, solution: &Solution, test: &TestArtifact) -> Outcome {
        self.invocations.fetch_add(1, Ordering::Relaxed);
        let start = Instant::now();
        let result = match &self.backend {
            ExecutionBackend::Table { .. } => Ok(match self.table(&test.problem_id) {
                Some(grid) => lookup(grid, solution, test),
                None => Outcome::error(0, format!("no table for problem {}", test.problem_id)),
            }),
            ExecutionBackend::IoJudge { interpreter } => self.judge(interpreter, solution, test, start),
            ExecutionBackend::Command { workdir_prefix } => {
                self.command(workdir_prefix.as_deref(), solution, test, start)
            }
        };
        match result {
            Ok(outcome) => outcome,
            Err(e) => Outcome::error(elapsed_ms(start), e.to_string()),
        }
    }

    fn table(&self, problem_id: &str) -> Option<&PassMatrix> {
        let ExecutionBackend::Table { grids } = &self.backend else {
            return None;
        };
        self.tables.get(problem_id).map(|&i| &grids[i])
    }

    /// Runs every solution against every test on `parallelism` workers and
    /// assembles the matrix.
    pub fn build_pass_matrix(
        &self,
        problem_id: &str,
        solutions: &[Solution],
        tests: &[TestArtifact],
        parallelism: usize,
    ) -> Result<PassMatrix> {
        par::with_threads(parallelism, || self.cross_execute(problem_id, solutions, tests))
    }

    /// [`Harness::build_pass_matrix`] on the ambient worker pool.
    ///
    /// Rows follow `sample_index`, columns follow the order of `tests`. Id
    /// problems are reported before anything executes.
    pub fn cross_execute(&self, problem_id: &str, solutions: &[Solution], tests: &[TestArtifact]) -> Result<PassMatrix> {
        check_unique(solutions.iter().map(|s| s.id.as_str()))?;
        check_unique(tests.iter().map(|t| t.id.as_str()))?;
        let mut seen = std::collections::HashSet::new();
        for s in solutions {
            if !seen.insert(s.sample_index) {
                return Err(Error::Malformed(format!(
                    "sample_index {} appears twice for problem {problem_id}",
                    s.sample_index
                )));
            }
        }
        if let Some(s) = solutions.iter().find(|s| s.problem_id != problem_id) {
            return Err(Error::Malformed(format!("solution {} belongs to {}", s.id, s.problem_id)));
        }
        if let Some(t) = tests.iter().find(|t| t.problem_id != problem_id) {
            return Err(Error::Malformed(format!("test {} belongs to {}", t.id, t.problem_id)));
        }
        if let ExecutionBackend::Table { .. } = &self.backend {
            let grid = self
                .table(problem_id)
                .ok_or_else(|| Error::Config(format!("table has no grid for problem {problem_id}")))?;
            for s in solutions {
                if grid.solution_index(&s.id).is_none() {
                    return Err(Error::Config(format!("table has no row for solution {}", s.id)));
                }
            }
            for t in tests {
                if grid.test_index(&t.id).is_none() {
                    return Err(Error::Config(format!("table has no column for test {}", t.id)));
                }
            }
        }

        let mut ordered: Vec<&Solution> = solutions.iter().collect();
        ordered.sort_by_key(|s| s.sample_index);
        let n = tests.len();
        let flat = par::map_range(ordered.len() * n, |k| self.run_pair(ordered[k / n], &tests[k % n]));
        let mut cells: Vec<Vec<Outcome>> = Vec::with_capacity(ordered.len());
        let mut it = flat.into_iter();
        for _ in 0..ordered.len() {
            cells.push(it.by_ref().take(n).collect());
        }
        PassMatrix::new(
            problem_id,
            ordered.iter().map(|s| s.id.clone()).collect(),
            tests.iter().map(|t| t.id.clone()).collect(),
            cells,
        )
    }

    fn deadline(&self, start: Instant) -> Instant {
        start + Duration::from_millis(self.limits.wall_timeout_ms)
    }

    fn exec(&self, argv: &[String], cwd: &Path, stdin: &[u8], deadline: Instant) -> ProcResult {
        process::run(Run {
            argv,
            cwd,
            stdin,
            deadline,
            memory_cap: self.limits.memory_cap_bytes,
            output_cap: self.limits.output_cap_bytes,
        })
    }

    /// Maps a run that did not exit zero to its outcome.
    fn abnormal(&self, run: &ProcResult, start: Instant, what: &str) -> Option<Outcome> {
        let ms = elapsed_ms(start);
        match run.status {
            ProcStatus::TimedOut => Some(Outcome::timeout(
                ms,
                format!("{what} exceeded {} ms", self.limits.wall_timeout_ms),
            )),
            _ if run.success() => None,
            _ => Some(Outcome::error(ms, format!("{what}: {}", run.describe()))),
        }
    }

    fn judge(
        &self,
        interpreter: &[String],
        solution: &Solution,
        test: &TestArtifact,
        start: Instant,
    ) -> Result<Outcome> {
        let (input, check) = match &test.payload {
            TestPayload::IoPair { input, expected } => (input, Err(expected)),
            TestPayload::CheckerProgram { input, checker } => (input, Ok(checker)),
            TestPayload::CommandScript { .. } => {
                return Ok(Outcome::error(
                    elapsed_ms(start),
                    "command_script test cannot run on the io_judge backend",
                ))
            }
        };
        let dir = tempfile::Builder::new().prefix("judge-").tempdir().map_err(|e| Error::io("tempdir", e))?;
        let file = write(dir.path(), "solution", &solution.payload)?;
        let argv = substitute(interpreter, &file);
        let deadline = self.deadline(start);
        let run = self.exec(&argv, dir.path(), input.as_bytes(), deadline);
        if let Some(o) = self.abnormal(&run, start, "solution") {
            return Ok(o);
        }
        match check {
            Err(expected) => {
                let got = String::from_utf8_lossy(&run.stdout);
                let ms = elapsed_ms(start);
                Ok(if normalize_output(&got) == normalize_output(expected) {
                    Outcome::pass(ms)
                } else {
                    Outcome::fail(ms)
                })
            }
            Ok(checker) => {
                let input_file = write(dir.path(), "input", input)?;
                let output_file = dir.path().join("output");
                fs::write(&output_file, &run.stdout).map_err(|e| Error::io(&output_file, e))?;
                let checker_file = write(dir.path(), "checker", checker)?;
                let argv = vec![
                    "sh".to_string(),
                    checker_file,
                    input_file,
                    output_file.to_string_lossy().into_owned(),
                ];
                let verdict = self.exec(&argv, dir.path(), b"", deadline);
                let ms = elapsed_ms(start);
                Ok(match verdict.status {
                    ProcStatus::TimedOut => {
                        Outcome::timeout(ms, format!("checker exceeded {} ms", self.limits.wall_timeout_ms))
                    }
                    ProcStatus::Exited(_) if verdict.success() => Outcome::pass(ms),
                    ProcStatus::Exited(_) => Outcome::fail(ms),
                    _ => Outcome::error(ms, format!("checker: {}", verdict.describe())),
                })
            }
        }
    }

    fn command(
        &self,
        prefix: Option<&str>,
        solution: &Solution,
        test: &TestArtifact,
        start: Instant,
    ) -> Result<Outcome> {
        let TestPayload::CommandScript { setup, run, asserts } = &test.payload else {
            return Ok(Outcome::error(
                elapsed_ms(start),
                format!("{} test cannot run on the command backend", test.protocol()),
            ));
        };
        let mut builder = tempfile::Builder::new();
        builder.prefix("cmd-");
        let dir = match prefix {
            Some(p) => {
                fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
                builder.tempdir_in(p).map_err(|e| Error::io(p, e))?
            }
            None => builder.tempdir().map_err(|e| Error::io("tempdir", e))?,
        };
        let file = write(dir.path(), "solution.sh", &solution.payload)?;
        let deadline = self.deadline(start);
        let shell = |script: &str| vec!["sh".to_string(), "-c".to_string(), script.to_string()];

        for step in setup {
            let r = self.exec(&shell(step), dir.path(), b"", deadline);
            if let Some(o) = self.abnormal(&r, start, "setup") {
                return Ok(o);
            }
        }
        let r = self.exec(&shell(&run.replace(SOLUTION_FILE, &file)), dir.path(), b"", deadline);
        if let Some(o) = self.abnormal(&r, start, "solution") {
            return Ok(o);
        }
        for check in asserts {
            let r = self.exec(&shell(check), dir.path(), b"", deadline);
            match r.status {
                ProcStatus::TimedOut => {
                    return Ok(Outcome::timeout(
                        elapsed_ms(start),
                        format!("assert exceeded {} ms", self.limits.wall_timeout_ms),
                    ))
                }
                ProcStatus::SpawnFailed(_) | ProcStatus::OutputExceeded => {
                    return Ok(Outcome::error(elapsed_ms(start), format!("assert: {}", r.describe())))
                }
                ProcStatus::Exited(_) if !r.success() => return Ok(Outcome::fail(elapsed_ms(start))),
                ProcStatus::Exited(_) => {}
            }
        }
        Ok(Outcome::pass(elapsed_ms(start)))
    }

    /// Runs a test-generator program and parses the `[{"input", "expected"}]`
    /// list it prints. Uses the io_judge interpreter when there is one and
    /// `sh` otherwise. Not counted as a matrix execution.
    pub fn materialize_generated(&self, code: &str) -> Result<Vec<(String, String)>> {
        let sh = [String::from("sh"), SOLUTION_FILE.to_string()];
        let interpreter: &[String] = match &self.backend {
            ExecutionBackend::IoJudge { interpreter } => interpreter,
            _ => &sh,
        };
        #[derive(Deserialize)]
        struct Pair {
            input: String,
            expected: String,
        }
        let start = Instant::now();
        let dir = tempfile::Builder::new().prefix("gen-").tempdir().map_err(|e| Error::io("tempdir", e))?;
        let file = write(dir.path(), "generator", code)?;
        let run = self.exec(&substitute(interpreter, &file), dir.path(), b"", self.deadline(start));
        if !run.success() {
            return Err(Error::Malformed(format!("test generator failed: {}", run.describe())));
        }
        let pairs: Vec<Pair> = serde_json::from_slice(&run.stdout)?;
        Ok(pairs.into_iter().map(|p| (p.input, p.expected)).collect())
    }
}

fn lookup(grid: &PassMatrix, solution: &Solution, test: &TestArtifact) -> Outcome {
    match (grid.solution_index(&solution.id), grid.test_index(&test.id)) {
        (Some(i), Some(j)) => grid.cell(i, j).clone(),
        _ => Outcome::error(0, format!("no table entry for ({}, {})", solution.id, test.id)),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path.to_string_lossy().into_owned())
}

fn substitute(template: &[String], file: &str) -> Vec<String> {
    template.iter().map(|a| a.replace(SOLUTION_FILE, file)).collect()
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Strips trailing whitespace from every line and drops trailing blank lines.
pub fn normalize_output(text: &str) -> String {
    let mut lines: Vec<&str> = text.lines().map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_output("1 2 \n3\t\n\n"), "1 2\n3");
        assert_eq!(normalize_output("a\r\nb"), "a\nb");
        assert_eq!(normalize_output(""), "");
        assert_ne!(normalize_output(" a"), normalize_output("a"));
    }

    #[test]
    fn limits_must_be_positive() {
        let l = Limits { wall_timeout_ms: 0, ..Limits::default() };
        assert!(Harness::new(ExecutionBackend::shell_judge(), l).is_err());
        let empty = ExecutionBackend::IoJudge { interpreter: vec![] };
        assert!(Harness::new(empty, Limits::default()).is_err());
    }

    #[test]
    fn backend_serde() {
        let b: ExecutionBackend = serde_json::from_str(r#"{"kind":"command"}"#).unwrap();
        assert_eq!(b, ExecutionBackend::Command { workdir_prefix: None });
        let j = serde_json::to_string(&ExecutionBackend::shell_judge()).unwrap();
        assert_eq!(j, r#"{"kind":"io_judge","interpreter":["sh","{solution_file}"]}"#);
    }
}
