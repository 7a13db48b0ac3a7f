//! Run configuration: a JSON file of per-module sections, then flags on top.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use verisynth::client::EndpointConfig;
use verisynth::evaluator::EvalConfig;
use verisynth::evolve::EvolveConfig;
use verisynth::harness::{ExecutionBackend, Limits};
use verisynth::pipeline::PipelineConfig;
use verisynth::sim::SimConfig;

use crate::exit::{Classify, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub evolve: EvolveConfig,
    pub pipeline: PipelineConfig,
    pub sim: SimConfig,
    pub eval: EvalConfig,
    pub limits: Limits,
    /// Backend for fixture and endpoint synthesis; `io_judge` with `sh` when
    /// absent.
    pub backend: Option<ExecutionBackend>,
    pub endpoint: Option<EndpointConfig>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).or_input(format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).or_input(format!("parsing config {}", path.display()))
    }

    /// Applies the global seed to every module that draws random numbers.
    pub fn set_seed(&mut self, seed: u64) {
        self.evolve.rng_seed = seed;
        self.pipeline.rng_seed = seed;
        self.sim.rng_seed = seed;
    }

    pub fn set_parallelism(&mut self, threads: usize) {
        self.pipeline.parallelism = threads;
    }
}

/// Hex SHA-256 over the parts that can change a run's results. Worker count
/// is left out because results do not depend on it.
pub fn digest(command: &str, config: &RunConfig, args: &impl Serialize, inputs: &[(&str, &[u8])]) -> String {
    let mut normalized = config.clone();
    normalized.pipeline.parallelism = 0;
    let mut h = Sha256::new();
    let body = serde_json::json!({
        "command": command,
        "config": normalized,
        "args": args,
        "inputs": inputs.iter().map(|(name, bytes)| (name.to_string(), hex::encode(Sha256::digest(bytes)))).collect::<Vec<_>>(),
    });
    h.update(body.to_string().as_bytes());
    hex::encode(h.finalize())
}
