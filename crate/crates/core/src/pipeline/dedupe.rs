//! Near-duplicate removal by word 8-gram Jaccard similarity.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::Problem;

pub const SHINGLE: usize = 8;

/// Lowercased whitespace tokens of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase().split_whitespace().map(str::to_string).collect()
}

/// Word 8-grams of `text`. Texts shorter than one shingle contribute their
/// whole token sequence as a single gram.
pub fn shingles(text: &str) -> HashSet<Vec<String>> {
    let toks = tokens(text);
    if toks.len() < SHINGLE {
        return HashSet::from([toks]);
    }
    toks.windows(SHINGLE).map(<[String]>::to_vec).collect()
}

pub fn jaccard(a: &HashSet<Vec<String>>, b: &HashSet<Vec<String>>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Keeps each problem unless it is at least `threshold`-similar to one
/// already kept. Input order is preserved.
pub fn dedupe(problems: Vec<Problem>, threshold: f64) -> Result<Vec<Problem>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("dedupe threshold {threshold} is outside (0, 1]")));
    }
    let mut kept: Vec<(Problem, HashSet<Vec<String>>)> = Vec::with_capacity(problems.len());
    for p in problems {
        let grams = shingles(&p.statement);
        if let Some((twin, _)) = kept.iter().find(|(_, g)| jaccard(g, &grams) >= threshold) {
            tracing::debug!(dropped = %p.id, kept = %twin.id, "near-duplicate problem");
            continue;
        }
        kept.push((p, grams));
    }
    Ok(kept.into_iter().map(|(p, _)| p).collect())
}
