use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionRequest, GatewayError};

/// One cached completion, stored as a single JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub key: String,
    pub request: CompletionRequest,
    pub response: String,
    #[serde(default)]
    pub latency_ms: u64,
    /// Seconds since the Unix epoch.
    #[serde(default)]
    pub timestamp: u64,
}

/// Append-only request/response cache backed by a JSONL file.
#[derive(Debug)]
pub struct CompletionCache {
    records: RwLock<HashMap<String, CompletionRecord>>,
    file: Mutex<Option<File>>,
    path: Option<PathBuf>,
}

impl CompletionCache {
    pub fn in_memory() -> Self {
        CompletionCache {
            records: RwLock::new(HashMap::new()),
            file: Mutex::new(None),
            path: None,
        }
    }

    /// Loads `path` if it exists and appends new records to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        let records = if path.exists() {
            Self::read_records(path)?
        } else {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| GatewayError::io(path, e))?;
            }
            HashMap::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| GatewayError::io(path, e))?;
        Ok(CompletionCache {
            records: RwLock::new(records),
            file: Mutex::new(Some(file)),
            path: Some(path.to_path_buf()),
        })
    }

    /// Loads `path` for lookups only. The file must exist.
    pub fn open_read_only(path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        let path = path.as_ref();
        Ok(CompletionCache {
            records: RwLock::new(Self::read_records(path)?),
            file: Mutex::new(None),
            path: Some(path.to_path_buf()),
        })
    }

    fn read_records(path: &Path) -> Result<HashMap<String, CompletionRecord>, GatewayError> {
        let file = File::open(path).map_err(|e| GatewayError::io(path, e))?;
        let mut records = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| GatewayError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CompletionRecord = serde_json::from_str(&line).map_err(|e| {
                GatewayError::Config(format!("{}:{}: bad cache record: {e}", path.display(), i + 1))
            })?;
            // first record for a key wins
            records.entry(record.key.clone()).or_insert(record);
        }
        Ok(records)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.records
            .read()
            .expect("cache lock poisoned")
            .get(key)
            .map(|r| r.response.clone())
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `record` unless its key is already present. Returns whether it was added.
    pub fn insert(&self, record: CompletionRecord) -> Result<bool, GatewayError> {
        let mut records = self.records.write().expect("cache lock poisoned");
        if records.contains_key(&record.key) {
            return Ok(false);
        }
        if let Some(file) = self.file.lock().expect("cache file lock poisoned").as_mut() {
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(file, "{line}")
                .and_then(|_| file.flush())
                .map_err(|e| GatewayError::io(self.path.as_deref().unwrap_or(Path::new("")), e))?;
        }
        records.insert(record.key.clone(), record);
        Ok(true)
    }

    /// Digest over the sorted (key, response) pairs; independent of append order.
    pub fn content_hash(&self) -> String {
        let records = self.records.read().expect("cache lock poisoned");
        let mut keys: Vec<&String> = records.keys().collect();
        keys.sort();
        let mut hasher = Sha256::new();
        for key in keys {
            hasher.update(key.as_bytes());
            hasher.update([0]);
            hasher.update(records[key].response.as_bytes());
            hasher.update([0]);
        }
        hex::encode(hasher.finalize())
    }
}
