//! Deterministic scripted backends for tests and offline runs.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::{FingerprintParams, Respondent};

type BehaviorFn = dyn Fn(&str) -> Result<String> + Send + Sync;

/// A respondent driven by a pure function of the prompt.
pub struct MockRespondent {
    engine: String,
    behavior: Arc<BehaviorFn>,
}

impl MockRespondent {
    pub fn with_fn<F>(name: &str, behavior: F) -> Self
    where
        F: Fn(&str) -> Result<String> + Send + Sync + 'static,
    {
        MockRespondent {
            engine: format!("mock:{name}"),
            behavior: Arc::new(behavior),
        }
    }

    /// Always answers with the top rating label of the prompt's scale.
    pub fn all_fives() -> Self {
        Self::with_fn("all-fives", |prompt| {
            Ok(if prompt_is_agreement(prompt) {
                "strongly agree".into()
            } else {
                "extremely relevant".into()
            })
        })
    }

    /// Always answers with the bottom rating label of the prompt's scale.
    pub fn all_zeros() -> Self {
        Self::with_fn("all-zeros", |prompt| {
            Ok(if prompt_is_agreement(prompt) {
                "strongly disagree".into()
            } else {
                "not at all relevant".into()
            })
        })
    }

    /// Echoes back whatever label the prompt's example block used.
    pub fn echo_example() -> Self {
        Self::with_fn("echo-example", |prompt| {
            prompt
                .lines()
                .find_map(|line| line.strip_prefix("Label: "))
                .map(|label| label.to_string())
                .ok_or_else(|| Error::Backend("echo-example: prompt has no example label".into()))
        })
    }

    /// Exact prompt-to-completion script; unknown prompts are an error.
    pub fn scripted(name: &str, script: HashMap<String, String>) -> Self {
        Self::with_fn(name, move |prompt| {
            script.get(prompt).cloned().ok_or_else(|| {
                Error::Backend(format!("mock script miss for prompt {:?}", head(prompt)))
            })
        })
    }

    /// Parse a CLI behavior name like `all-fives`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "all-fives" => Ok(Self::all_fives()),
            "all-zeros" => Ok(Self::all_zeros()),
            "echo-example" => Ok(Self::echo_example()),
            "donate-decline" => Ok(Self::with_fn("donate-decline", |_| {
                Ok("I am not interested in donating to your cause.".into())
            })),
            other => {
                if let Some(amount) = other.strip_prefix("donate-") {
                    let amount: u32 = amount
                        .parse()
                        .map_err(|_| Error::Config(format!("unknown mock behavior {other:?}")))?;
                    return Ok(Self::with_fn(&format!("donate-{amount}"), move |prompt| {
                        Ok(if prompt.contains("$250") {
                            format!("I will donate ${amount}.")
                        } else {
                            "Yes, I would like to donate.".into()
                        })
                    }));
                }
                Err(Error::Config(format!("unknown mock behavior {other:?}")))
            }
        }
    }
}

fn prompt_is_agreement(prompt: &str) -> bool {
    prompt.contains("strongly disagree")
}

fn head(s: &str) -> String {
    s.chars().take(40).collect()
}

impl Respondent for MockRespondent {
    fn complete(&self, prompt: &str) -> Result<String> {
        (self.behavior)(prompt)
    }

    fn fingerprint_params(&self) -> FingerprintParams {
        FingerprintParams {
            engine: self.engine.clone(),
            temperature: 0.0,
            max_tokens: 64,
        }
    }
}
