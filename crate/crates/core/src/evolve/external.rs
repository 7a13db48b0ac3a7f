//! Strategy proposals from an external text-completion endpoint.

use std::fmt;

use crate::client::{extract_block, Completion};
use crate::strategy::Strategy;

const TEMPLATE: &str = include_str!("../../assets/prompts/mutate_strategy.txt");
/// How many trailing scores are shown to the endpoint.
const RECENT_SCORES: usize = 5;

/// Why a proposal was not used. Rejections are counted, never fatal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Transport(String),
    Parse(String),
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Transport(e) => write!(f, "request failed: {e}"),
            Rejection::Parse(e) => write!(f, "unusable reply: {e}"),
        }
    }
}

pub fn mutation_prompt(strategy: &Strategy, history: &[f64]) -> String {
    let recent = &history[history.len().saturating_sub(RECENT_SCORES)..];
    let scores = if recent.is_empty() {
        "(none yet)".to_string()
    } else {
        recent.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>().join(", ")
    };
    TEMPLATE
        .replace("{strategy}", &strategy.to_json())
        .replace("{scores}", &scores)
}

/// Asks `client` for an improved strategy.
pub fn external_mutate(
    strategy: &Strategy,
    history: &[f64],
    client: &dyn Completion,
    seed: u64,
) -> Result<Strategy, Rejection> {
    let reply = client
        .complete(&mutation_prompt(strategy, history), seed)
        .map_err(|e| Rejection::Transport(e.to_string()))?;
    Strategy::from_json(extract_block(&reply)).map_err(|e| Rejection::Parse(e.to_string()))
}
