//! Domain records: problems, candidate solutions, test artifacts, execution
//! outcomes and annotated seed instances.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::PassMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seed,
    Synthesized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub statement: String,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_ref: Option<String>,
}

impl Problem {
    pub fn new(id: impl Into<String>, statement: impl Into<String>, origin: Origin) -> Result<Self> {
        let problem = Problem {
            id: id.into(),
            statement: statement.into(),
            origin,
            source_ref: None,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Malformed("problem id is empty".into()));
        }
        if self.statement.trim().is_empty() {
            return Err(Error::Malformed(format!("problem `{}` has an empty statement", self.id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub id: String,
    pub problem_id: String,
    /// Program source or agent transcript.
    pub payload: String,
    pub sample_index: usize,
}

/// Protocol-specific content of a test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum TestPayload {
    /// Feed `input` on stdin, compare stdout against `expected`.
    IoPair { input: String, expected: String },
    /// Run `setup`, then the solution through `run`, then every `assert`.
    CommandScript {
        #[serde(default)]
        setup: Vec<String>,
        #[serde(default = "default_run")]
        run: String,
        #[serde(rename = "assert")]
        asserts: Vec<String>,
    },
    /// Feed `input` to the solution, then run `checker` as
    /// `sh <checker> <input_file> <output_file>`; pass iff it exits zero.
    CheckerProgram { input: String, checker: String },
}

pub(crate) fn default_run() -> String {
    "sh {solution_file}".to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    IoPair,
    CommandScript,
    CheckerProgram,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::IoPair => "io_pair",
            Protocol::CommandScript => "command_script",
            Protocol::CheckerProgram => "checker_program",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestArtifact {
    pub id: String,
    pub problem_id: String,
    pub payload: TestPayload,
    /// True only for tests provided with seed data.
    #[serde(default)]
    pub annotated: bool,
}

impl TestArtifact {
    pub fn protocol(&self) -> Protocol {
        match self.payload {
            TestPayload::IoPair { .. } => Protocol::IoPair,
            TestPayload::CommandScript { .. } => Protocol::CommandScript,
            TestPayload::CheckerProgram { .. } => Protocol::CheckerProgram,
        }
    }

    pub fn io_pair(
        id: impl Into<String>,
        problem_id: impl Into<String>,
        input: impl Into<String>,
        expected: impl Into<String>,
    ) -> Self {
        TestArtifact {
            id: id.into(),
            problem_id: problem_id.into(),
            payload: TestPayload::IoPair {
                input: input.into(),
                expected: expected.into(),
            },
            annotated: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
    Timeout,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// Result of running one solution against one test.
///
/// `detail` is present exactly when the verdict is `error` or `timeout`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawOutcome")]
pub struct Outcome {
    verdict: Verdict,
    wall_time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

#[derive(Deserialize)]
struct RawOutcome {
    verdict: Verdict,
    wall_time_ms: u64,
    #[serde(default)]
    detail: Option<String>,
}

impl TryFrom<RawOutcome> for Outcome {
    type Error = String;

    fn try_from(raw: RawOutcome) -> std::result::Result<Self, String> {
        match (raw.verdict, raw.detail) {
            (Verdict::Pass | Verdict::Fail, None) => Ok(Outcome {
                verdict: raw.verdict,
                wall_time_ms: raw.wall_time_ms,
                detail: None,
            }),
            (Verdict::Error | Verdict::Timeout, Some(detail)) => Ok(Outcome {
                verdict: raw.verdict,
                wall_time_ms: raw.wall_time_ms,
                detail: Some(detail),
            }),
            (verdict, _) => Err(format!(
                "outcome detail must be present iff verdict is error or timeout (verdict {verdict:?})"
            )),
        }
    }
}

impl Outcome {
    pub fn pass(wall_time_ms: u64) -> Self {
        Outcome {
            verdict: Verdict::Pass,
            wall_time_ms,
            detail: None,
        }
    }

    pub fn fail(wall_time_ms: u64) -> Self {
        Outcome {
            verdict: Verdict::Fail,
            wall_time_ms,
            detail: None,
        }
    }

    pub fn error(wall_time_ms: u64, detail: impl Into<String>) -> Self {
        Outcome {
            verdict: Verdict::Error,
            wall_time_ms,
            detail: Some(detail.into()),
        }
    }

    pub fn timeout(wall_time_ms: u64, detail: impl Into<String>) -> Self {
        Outcome {
            verdict: Verdict::Timeout,
            wall_time_ms,
            detail: Some(detail.into()),
        }
    }

    /// Builds an outcome from a verdict, synthesizing a detail where one is required.
    pub fn from_verdict(verdict: Verdict, wall_time_ms: u64) -> Self {
        match verdict {
            Verdict::Pass => Outcome::pass(wall_time_ms),
            Verdict::Fail => Outcome::fail(wall_time_ms),
            Verdict::Error => Outcome::error(wall_time_ms, "error"),
            Verdict::Timeout => Outcome::timeout(wall_time_ms, "timeout"),
        }
    }

    pub fn verdict(&self) -> Verdict {
        self.verdict
    }

    pub fn wall_time_ms(&self) -> u64 {
        self.wall_time_ms
    }

    pub fn detail(&self) -> Option<&str> {
        self.detail.as_deref()
    }

    pub fn is_pass(&self) -> bool {
        self.verdict.is_pass()
    }

    pub(crate) fn without_timing(&self) -> Outcome {
        Outcome {
            wall_time_ms: 0,
            ..self.clone()
        }
    }
}

/// A human-annotated problem with generated candidates and their execution
/// results. Ground truth for strategy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSeedInstance")]
pub struct SeedInstance {
    pub problem: Problem,
    pub annotated_tests: Vec<TestArtifact>,
    pub candidate_solutions: Vec<Solution>,
    pub candidate_tests: Vec<TestArtifact>,
    /// M×N outcomes of candidates against candidate tests.
    pub generated_matrix: PassMatrix,
    /// M×|annotated| outcomes of candidates against the annotated suite.
    pub annotated_matrix: PassMatrix,
}

#[derive(Deserialize)]
struct RawSeedInstance {
    problem: Problem,
    annotated_tests: Vec<TestArtifact>,
    candidate_solutions: Vec<Solution>,
    candidate_tests: Vec<TestArtifact>,
    generated_matrix: PassMatrix,
    annotated_matrix: PassMatrix,
}

impl TryFrom<RawSeedInstance> for SeedInstance {
    type Error = Error;

    fn try_from(raw: RawSeedInstance) -> Result<Self> {
        SeedInstance::new(
            raw.problem,
            raw.annotated_tests,
            raw.candidate_solutions,
            raw.candidate_tests,
            raw.generated_matrix,
            raw.annotated_matrix,
        )
    }
}

impl SeedInstance {
    pub fn new(
        problem: Problem,
        annotated_tests: Vec<TestArtifact>,
        candidate_solutions: Vec<Solution>,
        candidate_tests: Vec<TestArtifact>,
        generated_matrix: PassMatrix,
        annotated_matrix: PassMatrix,
    ) -> Result<Self> {
        let seed = SeedInstance {
            problem,
            annotated_tests,
            candidate_solutions,
            candidate_tests,
            generated_matrix,
            annotated_matrix,
        };
        seed.validate()?;
        Ok(seed)
    }

    pub fn id(&self) -> &str {
        &self.problem.id
    }

    pub fn m(&self) -> usize {
        self.generated_matrix.rows()
    }

    fn validate(&self) -> Result<()> {
        let id = &self.problem.id;
        let bad = |msg: String| Err(Error::Malformed(format!("seed `{id}`: {msg}")));
        self.problem.validate()?;
        if self.annotated_tests.is_empty() {
            return bad("annotated suite is empty".into());
        }
        if let Some(t) = self.annotated_tests.iter().find(|t| !t.annotated) {
            return bad(format!("annotated suite contains non-annotated test `{}`", t.id));
        }
        if let Some(t) = self.candidate_tests.iter().find(|t| t.annotated) {
            return bad(format!("candidate test `{}` is marked annotated", t.id));
        }
        let m = self.generated_matrix.rows();
        if m < 2 {
            return bad(format!("needs at least 2 candidate solutions, got {m}"));
        }
        if self.generated_matrix.cols() == 0 {
            return bad("needs at least 1 candidate test".into());
        }
        if self.generated_matrix.solution_ids != self.annotated_matrix.solution_ids {
            return bad("generated and annotated matrices disagree on solution order".into());
        }
        let sol_ids: Vec<&str> = self.candidate_solutions.iter().map(|s| s.id.as_str()).collect();
        if !sol_ids.is_empty() && sol_ids != self.generated_matrix.solution_ids.iter().map(String::as_str).collect::<Vec<_>>() {
            return bad("candidate_solutions do not match matrix solution ids".into());
        }
        let test_ids: Vec<&str> = self.candidate_tests.iter().map(|t| t.id.as_str()).collect();
        if !test_ids.is_empty() && test_ids != self.generated_matrix.test_ids.iter().map(String::as_str).collect::<Vec<_>>() {
            return bad("candidate_tests do not match matrix test ids".into());
        }
        let ann_ids: HashSet<&str> = self.annotated_tests.iter().map(|t| t.id.as_str()).collect();
        if self.annotated_matrix.cols() != self.annotated_tests.len()
            || self.annotated_matrix.test_ids.iter().any(|t| !ann_ids.contains(t.as_str()))
        {
            return bad("annotated matrix columns do not match the annotated suite".into());
        }
        Ok(())
    }
}
