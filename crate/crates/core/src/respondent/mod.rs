//! Pluggable prompt-to-completion backends plus rating parsing and caching.
//!
//! A [`Respondent`] is anything that maps a prompt string to a completion
//! string: a live HTTP completion API, a deterministic mock, or a replayer
//! over recorded fixtures. All sampling and aggregation happens downstream;
//! the backends never assume determinism even at temperature 0.

mod cache;
mod fixture;
mod http;
mod mock;
mod parse;

pub use cache::{CacheStore, CachingRespondent, CompletionRecord};
pub use fixture::FixtureRespondent;
pub use http::HttpRespondent;
pub use mock::MockRespondent;
pub use parse::{parse_rating, ParsedRating};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Which kind of backend a [`ModelConfig`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
    Fixture,
}

/// Backend configuration.
///
/// `target` is the endpoint URL for `http`, the behavior name for `mock`,
/// and the fixture directory for `fixture`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backend: BackendKind,
    pub target: String,
    pub engine: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub retry_limit: u32,
    /// Minimum spacing between requests, expressed as requests per minute.
    pub rate_limit_rpm: Option<u32>,
    /// Name of the environment variable holding the API token.
    pub credential_env: Option<String>,
}

impl ModelConfig {
    pub fn new(backend: BackendKind, target: impl Into<String>, engine: impl Into<String>) -> Self {
        ModelConfig {
            backend,
            target: target.into(),
            engine: engine.into(),
            temperature: 0.0,
            max_tokens: 64,
            timeout_secs: 30,
            retry_limit: 3,
            rate_limit_rpm: None,
            credential_env: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err(Error::Config(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens < 1 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        Ok(())
    }

    pub fn fingerprint_params(&self) -> FingerprintParams {
        FingerprintParams {
            engine: self.engine.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }
}

/// The request parameters that, together with the prompt, identify a
/// completion for caching and replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintParams {
    pub engine: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// Stable hash of (prompt, engine, temperature, max_tokens).
///
/// The preimage uses the shortest round-trip decimal form of the
/// temperature, so identical configurations hash identically across runs
/// and platforms.
pub fn fingerprint(prompt: &str, params: &FingerprintParams) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"mfq-completion-v1\x00");
    hasher.update(params.engine.as_bytes());
    hasher.update(b"\x00");
    hasher.update(format!("{:?}", params.temperature).as_bytes());
    hasher.update(b"\x00");
    hasher.update(params.max_tokens.to_string().as_bytes());
    hasher.update(b"\x00");
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Anything that maps a prompt to a completion.
pub trait Respondent: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;

    /// Parameters used to fingerprint this respondent's completions.
    fn fingerprint_params(&self) -> FingerprintParams;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_frozen() {
        let params = FingerprintParams {
            engine: "text-davinci-002".into(),
            temperature: 0.0,
            max_tokens: 64,
        };
        // Frozen value: guards cross-run and cross-version stability.
        assert_eq!(
            fingerprint("hello", &params),
            "5c822a78eaf7847acd8f5aa7209ad56be6cb4b419cf6578ec528b57a9701bd11"
        );
    }

    #[test]
    fn fingerprint_depends_on_every_input() {
        let base = FingerprintParams {
            engine: "e".into(),
            temperature: 0.0,
            max_tokens: 64,
        };
        let fp = fingerprint("p", &base);
        assert_ne!(fp, fingerprint("q", &base));
        let mut other = base.clone();
        other.engine = "f".into();
        assert_ne!(fp, fingerprint("p", &other));
        let mut other = base.clone();
        other.temperature = 0.5;
        assert_ne!(fp, fingerprint("p", &other));
        let mut other = base.clone();
        other.max_tokens = 65;
        assert_ne!(fp, fingerprint("p", &other));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ModelConfig::new(BackendKind::Mock, "all-fives", "mock");
        cfg.validate().unwrap();
        cfg.temperature = -0.1;
        assert!(cfg.validate().is_err());
        cfg.temperature = 0.0;
        cfg.max_tokens = 0;
        assert!(cfg.validate().is_err());
    }
}
