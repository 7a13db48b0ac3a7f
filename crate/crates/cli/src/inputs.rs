//! Loading strategies, seed sets and matrices from disk.

use std::path::Path;

use verisynth::{builtin, PassMatrix, SeedInstance, Strategy};

use crate::exit::{Classify, CliResult, Failure};

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).or_input(format!("reading {}", path.display()))
}

/// A strategy file, or a built-in name when no such file exists. Returns the
/// strategy and the bytes it was read from (for the run digest).
pub fn strategy(spec: &str) -> CliResult<(Strategy, Vec<u8>)> {
    let path = Path::new(spec);
    if path.is_file() {
        let bytes = read(path)?;
        let text = String::from_utf8(bytes.clone()).or_input(format!("{spec} is not UTF-8"))?;
        let s = Strategy::from_json(&text).map_err(|e| Failure::input(format!("{spec}: {e}")))?;
        return Ok((s, bytes));
    }
    match builtin(spec) {
        Ok(s) => Ok((s, spec.as_bytes().to_vec())),
        Err(_) => Err(Failure::input(format!("`{spec}` is neither a strategy file nor a built-in strategy"))),
    }
}

/// Seed instances from a JSON array or a JSONL file.
pub fn seeds(path: &Path) -> CliResult<(Vec<SeedInstance>, Vec<u8>)> {
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).or_input(format!("{} is not UTF-8", path.display()))?;
    let parsed: Vec<SeedInstance> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).or_input(format!("parsing {}", path.display()))?
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).or_input(format!("{} line {}", path.display(), i + 1)))
            .collect::<CliResult<_>>()?
    };
    if parsed.is_empty() {
        return Err(Failure::input(format!("{} holds no seed instances", path.display())));
    }
    Ok((parsed, bytes))
}

pub fn matrix(path: &Path) -> CliResult<PassMatrix> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).or_input(format!("parsing matrix {}", path.display()))
}

/// Parses `4,8,16` into equal-sided sizes and `4x8` into explicit ones.
pub fn sizes(spec: &str) -> CliResult<Vec<(usize, usize)>> {
    spec.split(',')
        .map(|part| {
            let part = part.trim();
            let parsed = match part.split_once('x') {
                Some((m, n)) => m.parse().ok().zip(n.parse().ok()),
                None => part.parse().ok().map(|v| (v, v)),
            };
            parsed.ok_or_else(|| Failure::input(format!("bad size `{part}` (expected `16` or `16x8`)")))
        })
        .collect()
}
