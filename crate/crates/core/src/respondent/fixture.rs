//! Replay recorded completions so analyses run without live API access.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{fingerprint, CacheStore, FingerprintParams, Respondent};

/// Sidecar describing a fixture directory: the recorded engine parameters
/// plus the store file name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FixtureManifest {
    pub engine: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub cache: String,
}

/// Replays a recorded store.
///
/// Repeated queries for the same prompt walk the recorded completions in
/// append order and stick at the last one. Single-record prompts therefore
/// replay deterministically, while multi-record prompts (such as repeated
/// donation episodes) reproduce the recorded sequence.
pub struct FixtureRespondent {
    store: CacheStore,
    params: FingerprintParams,
    cursors: Mutex<HashMap<String, usize>>,
}

impl FixtureRespondent {
    /// Open a fixture directory containing `fixture.toml` and its store.
    pub fn open_dir(dir: &Path) -> Result<FixtureRespondent> {
        let manifest_path = dir.join("fixture.toml");
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| {
            Error::Config(format!("fixture manifest {}: {e}", manifest_path.display()))
        })?;
        let manifest: FixtureManifest = toml::from_str(&text).map_err(|e| {
            Error::Config(format!("fixture manifest {}: {e}", manifest_path.display()))
        })?;
        let store = CacheStore::open_read_only(&dir.join(&manifest.cache))?;
        Ok(FixtureRespondent {
            store,
            params: FingerprintParams {
                engine: manifest.engine,
                temperature: manifest.temperature,
                max_tokens: manifest.max_tokens,
            },
            cursors: Mutex::new(HashMap::new()),
        })
    }

    /// Replay a bare store file with explicit parameters.
    pub fn from_store(store: CacheStore, params: FingerprintParams) -> FixtureRespondent {
        FixtureRespondent {
            store,
            params,
            cursors: Mutex::new(HashMap::new()),
        }
    }

    /// Reset replay cursors so the next queries start from the first record.
    pub fn rewind(&self) {
        self.cursors.lock().unwrap().clear();
    }
}

impl Respondent for FixtureRespondent {
    fn complete(&self, prompt: &str) -> Result<String> {
        let fp = fingerprint(prompt, &self.params);
        let records = self.store.get_all(&fp);
        if records.is_empty() {
            return Err(Error::FixtureMiss {
                fingerprint: fp,
                prompt_head: prompt.chars().take(48).collect(),
            });
        }
        let mut cursors = self.cursors.lock().unwrap();
        let cursor = cursors.entry(fp).or_insert(0);
        let idx = (*cursor).min(records.len() - 1);
        *cursor += 1;
        Ok(records[idx].completion.clone())
    }

    fn fingerprint_params(&self) -> FingerprintParams {
        self.params.clone()
    }
}
