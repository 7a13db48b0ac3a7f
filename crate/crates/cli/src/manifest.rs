//! Per-run manifests, written atomically when a command finishes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::exit::{Classify, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_digest: String,
    pub rng_seed: u64,
    pub started_at_unix_ms: u64,
    pub finished_at_unix_ms: u64,
    /// Artifact name to path. Paths inside the run directory are relative
    /// to it.
    pub artifacts: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl Manifest {
    pub fn start(command: &str, config_digest: String, rng_seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            config_digest,
            rng_seed,
            started_at_unix_ms: now_ms(),
            finished_at_unix_ms: 0,
            artifacts: BTreeMap::new(),
            counts: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn artifact(&mut self, name: &str, path: &Path, run_dir: &Path) -> &mut Self {
        let shown = path.strip_prefix(run_dir).unwrap_or(path);
        self.artifacts.insert(name.to_string(), shown.to_string_lossy().into_owned());
        self
    }

    pub fn count(&mut self, name: &str, value: u64) -> &mut Self {
        self.counts.insert(name.to_string(), value);
        self
    }

    pub fn metric(&mut self, name: &str, value: f64) -> &mut Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    /// Resolves an artifact path recorded by [`Manifest::artifact`].
    pub fn resolve(&self, name: &str, run_dir: &Path) -> Option<PathBuf> {
        let p = Path::new(self.artifacts.get(name)?);
        Some(if p.is_absolute() { p.to_path_buf() } else { run_dir.join(p) })
    }

    pub fn finish(mut self, run_dir: &Path, file_name: &str) -> CliResult<PathBuf> {
        self.finished_at_unix_ms = now_ms();
        let path = run_dir.join(file_name);
        let body = serde_json::to_vec_pretty(&self).or_backend("serializing manifest")?;
        verisynth::pipeline::write_atomic(&path, &body).or_backend(format!("writing {}", path.display()))?;
        tracing::info!(manifest = %path.display(), "run recorded");
        Ok(path)
    }
}

/// `manifest-<command>.json`, or `manifest-<command>-m<m>-n<n>.json` for
/// runs at a specific size.
pub fn file_name(command: &str, size: Option<(usize, usize)>) -> String {
    match size {
        Some((m, n)) => format!("manifest-{command}-m{m}-n{n}.json"),
        None => format!("manifest-{command}.json"),
    }
}

/// Every manifest in `dir`, sorted by file name.
pub fn load_all(dir: &Path) -> CliResult<Vec<(String, Manifest)>> {
    let entries = std::fs::read_dir(dir).or_input(format!("reading run directory {}", dir.display()))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("manifest-") && n.ends_with(".json"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let path = dir.join(&n);
            let text = std::fs::read_to_string(&path).or_input(format!("reading {}", path.display()))?;
            let m = serde_json::from_str(&text).or_input(format!("parsing {}", path.display()))?;
            Ok((n, m))
        })
        .collect()
}
