//! Text-completion clients used to generate problems, solutions, tests and
//! strategy proposals.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Environment variable holding the bearer token for [`HttpCompletion`].
pub const API_KEY_ENV: &str = "VERISYNTH_API_KEY";

/// A source of completions. `seed` is forwarded so replays can be pinned
/// where the backend supports it.
pub trait Completion: Sync {
    fn complete(&self, prompt: &str, seed: u64) -> Result<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL of an OpenAI-compatible API, e.g. `http://localhost:8000/v1`.
    pub url: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_temperature() -> f64 {
    0.8
}

fn default_timeout() -> u64 {
    120
}

/// Chat-completions client.
pub struct HttpCompletion {
    config: EndpointConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpCompletion {
    pub fn new(config: EndpointConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        HttpCompletion {
            api_key: std::env::var(API_KEY_ENV).ok(),
            config,
            agent,
        }
    }
}

impl Completion for HttpCompletion {
    fn complete(&self, prompt: &str, seed: u64) -> Result<String> {
        let url = format!("{}/chat/completions", self.config.url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "seed": seed,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| Error::Client(format!("{url}: {e}")))?;
        let reply: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Client(format!("{url}: unreadable response: {e}")))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Error::Client(format!("{url}: response has no message content")))
    }
}

/// Pulls the first fenced code block out of a reply, or returns the reply
/// trimmed if there is none.
pub fn extract_block(reply: &str) -> &str {
    let Some(open) = reply.find("```") else {
        return reply.trim();
    };
    let after = &reply[open + 3..];
    // Skip the language tag on the fence line.
    let body = after.find('\n').map_or(after, |nl| &after[nl + 1..]);
    match body.find("```") {
        Some(close) => body[..close].trim(),
        None => body.trim(),
    }
}
