//! Append-only completion store, used both as a live cache and as the
//! fixture format for replay.
//!
//! One self-describing JSON record per line. Appends are crash-safe and the
//! files diff cleanly, which is what makes recorded sessions reviewable.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{fingerprint, FingerprintParams, Respondent};

/// One recorded completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub fingerprint: String,
    pub prompt: String,
    pub completion: String,
    pub engine: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timestamp: u64,
    pub attempts: u32,
}

impl CompletionRecord {
    pub fn new(prompt: &str, completion: &str, params: &FingerprintParams, attempts: u32) -> Self {
        CompletionRecord {
            fingerprint: fingerprint(prompt, params),
            prompt: prompt.to_string(),
            completion: completion.to_string(),
            engine: params.engine.clone(),
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            attempts,
        }
    }
}

struct Inner {
    // Record indices per fingerprint, in file order.
    index: HashMap<String, Vec<usize>>,
    records: Vec<CompletionRecord>,
    writer: Option<File>,
}

/// Line-delimited persistent completion store.
///
/// Writes are serialized behind a single lock; corrupt lines are skipped at
/// load time and reported through [`CacheStore::skipped_lines`].
pub struct CacheStore {
    path: PathBuf,
    inner: Mutex<Inner>,
    skipped: usize,
}

impl CacheStore {
    /// Open for reading and appending, creating the file if needed.
    pub fn open(path: &Path) -> Result<CacheStore> {
        let (records, skipped) = Self::load_records(path)?;
        let writer = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::build(path, records, skipped, Some(writer)))
    }

    /// Open an existing store read-only (for fixture replay).
    pub fn open_read_only(path: &Path) -> Result<CacheStore> {
        if !path.exists() {
            return Err(Error::Cache(format!("no such store: {}", path.display())));
        }
        let (records, skipped) = Self::load_records(path)?;
        Ok(Self::build(path, records, skipped, None))
    }

    fn build(
        path: &Path,
        records: Vec<CompletionRecord>,
        skipped: usize,
        writer: Option<File>,
    ) -> CacheStore {
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, rec) in records.iter().enumerate() {
            index.entry(rec.fingerprint.clone()).or_default().push(i);
        }
        CacheStore {
            path: path.to_path_buf(),
            inner: Mutex::new(Inner {
                index,
                records,
                writer,
            }),
            skipped,
        }
    }

    fn load_records(path: &Path) -> Result<(Vec<CompletionRecord>, usize)> {
        let mut records = Vec::new();
        let mut skipped = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for (lineno, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CompletionRecord>(&line) {
                    Ok(rec) => records.push(rec),
                    Err(e) => {
                        skipped += 1;
                        eprintln!(
                            "warning: {}:{}: skipping corrupt record: {e}",
                            path.display(),
                            lineno + 1
                        );
                    }
                }
            }
        }
        Ok((records, skipped))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of corrupt lines skipped while loading.
    pub fn skipped_lines(&self) -> usize {
        self.skipped
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Most recent record for a fingerprint.
    pub fn get(&self, fingerprint: &str) -> Option<CompletionRecord> {
        let inner = self.inner.lock().unwrap();
        let idx = *inner.index.get(fingerprint)?.last()?;
        Some(inner.records[idx].clone())
    }

    /// All records for a fingerprint, in append order.
    pub fn get_all(&self, fingerprint: &str) -> Vec<CompletionRecord> {
        let inner = self.inner.lock().unwrap();
        inner
            .index
            .get(fingerprint)
            .map(|ids| ids.iter().map(|&i| inner.records[i].clone()).collect())
            .unwrap_or_default()
    }

    /// Append a record to the store and the on-disk file.
    pub fn put(&self, record: CompletionRecord) -> Result<()> {
        let mut inner = self.inner.lock().unwrap();
        if let Some(writer) = inner.writer.as_mut() {
            let mut line = serde_json::to_string(&record)
                .map_err(|e| Error::Cache(format!("serialize record: {e}")))?;
            line.push('\n');
            writer.write_all(line.as_bytes())?;
            writer.flush()?;
        } else {
            return Err(Error::Cache("store is read-only".into()));
        }
        let idx = inner.records.len();
        let fp = record.fingerprint.clone();
        inner.records.push(record);
        inner.index.entry(fp).or_default().push(idx);
        Ok(())
    }
}

/// Write-through wrapper that records every completion.
///
/// With `reuse` set, a warm cache answers repeat prompts without touching
/// the inner respondent at all, which is what makes re-running a recorded
/// session free of network calls.
pub struct CachingRespondent<R> {
    inner: R,
    store: std::sync::Arc<CacheStore>,
    reuse: bool,
}

impl<R: Respondent> CachingRespondent<R> {
    pub fn new(inner: R, store: std::sync::Arc<CacheStore>, reuse: bool) -> Self {
        CachingRespondent {
            inner,
            store,
            reuse,
        }
    }

    pub fn store(&self) -> &CacheStore {
        &self.store
    }
}

impl<R: Respondent> Respondent for CachingRespondent<R> {
    fn complete(&self, prompt: &str) -> Result<String> {
        let params = self.inner.fingerprint_params();
        let fp = fingerprint(prompt, &params);
        if self.reuse {
            if let Some(rec) = self.store.get(&fp) {
                return Ok(rec.completion);
            }
        }
        let completion = self.inner.complete(prompt)?;
        self.store
            .put(CompletionRecord::new(prompt, &completion, &params, 1))?;
        Ok(completion)
    }

    fn fingerprint_params(&self) -> FingerprintParams {
        self.inner.fingerprint_params()
    }
}
