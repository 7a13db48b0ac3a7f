//! One module per subcommand.

pub mod eval;
pub mod evolve;
pub mod rank;
pub mod report;
pub mod sim;
pub mod synth;

use std::path::{Path, PathBuf};

use verisynth::evaluator::Case;
use verisynth::sim::{sample_worlds, LatentWorld, SimConfig};

use crate::exit::{Classify, CliResult};
use crate::inputs;

pub fn write(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).or_backend(format!("creating {}", parent.display()))?;
    }
    verisynth::pipeline::write_atomic(path, bytes).or_backend(format!("writing {}", path.display()))
}

/// `path` if given, else `name` inside the run directory.
pub fn output(path: Option<&PathBuf>, run_dir: &Path, name: &str) -> PathBuf {
    path.cloned().unwrap_or_else(|| run_dir.join(name))
}

/// Evaluation cases from a seed file, or from simulated worlds judged
/// against their hidden truth. Also returns the seed file bytes, if any.
pub fn cases(seeds: Option<&Path>, sim: &SimConfig) -> CliResult<(Vec<Case>, Vec<u8>)> {
    match seeds {
        Some(path) => {
            let (seeds, bytes) = inputs::seeds(path)?;
            Ok((seeds.iter().map(Case::from_seed).collect(), bytes))
        }
        None => {
            let worlds = sample_worlds(sim)?;
            Ok((worlds.iter().map(LatentWorld::case).collect(), Vec::new()))
        }
    }
}

/// Renders rows with a header through the csv writer.
pub fn csv<R: serde::Serialize>(rows: &[R]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).or_backend("formatting csv")?;
    }
    w.into_inner().or_backend("formatting csv")
}
