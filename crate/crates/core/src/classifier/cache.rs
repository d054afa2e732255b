//! Content-addressed store of raw backend replies.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fsutil::write_atomic;
use crate::prompting::PromptVersion;

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cache file {path}, line {line_no}: {reason}")]
    Malformed {
        path: PathBuf,
        line_no: u64,
        reason: String,
    },
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    reply: String,
}

/// Hex SHA-256 over the length-prefixed request identity.
pub fn cache_key(
    backend_kind: &str,
    model: &str,
    temperature: f64,
    version: PromptVersion,
    body: &str,
) -> String {
    let temperature = temperature.to_string();
    let mut hasher = Sha256::new();
    for field in [backend_kind, model, &temperature, version.as_str(), body] {
        hasher.update((field.len() as u64).to_le_bytes());
        hasher.update(field.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Thread-safe reply cache. Concurrent inserts of the same key are
/// last-write-wins.
#[derive(Debug, Default)]
pub struct ResponseCache {
    entries: RwLock<HashMap<String, String>>,
}

impl ResponseCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a JSONL cache file. A missing file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self, CacheError> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Self::new()),
            Err(source) => {
                return Err(CacheError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let mut entries = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CacheError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CacheLine = serde_json::from_str(&line).map_err(|e| CacheError::Malformed {
                path: path.to_path_buf(),
                line_no: idx as u64 + 1,
                reason: e.to_string(),
            })?;
            entries.insert(parsed.key, parsed.reply);
        }
        Ok(ResponseCache {
            entries: RwLock::new(entries),
        })
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(key)
            .cloned()
    }

    pub fn insert(&self, key: String, reply: String) {
        self.entries
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(key, reply);
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// JSONL, sorted by key so equal caches produce equal files.
    pub fn to_jsonl(&self) -> String {
        let entries = self.entries.read().unwrap_or_else(|e| e.into_inner());
        let mut keys: Vec<_> = entries.keys().collect();
        keys.sort();
        let mut out = String::new();
        for key in keys {
            let line = CacheLine {
                key: key.clone(),
                reply: entries[key].clone(),
            };
            out.push_str(&serde_json::to_string(&line).expect("cache line serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        write_atomic(path, self.to_jsonl().as_bytes()).map_err(|source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn keys_are_content_addressed() {
        let a = cache_key("remote-llm", "gpt-3.5-turbo", 0.0, PromptVersion::V2, "body");
        let b = cache_key("remote-llm", "gpt-3.5-turbo", 0.0, PromptVersion::V2, "body");
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        assert_ne!(a, cache_key("remote-llm", "gpt-3.5-turbo", 0.5, PromptVersion::V2, "body"));
        assert_ne!(a, cache_key("remote-llm", "gpt-4", 0.0, PromptVersion::V2, "body"));
        assert_ne!(a, cache_key("remote-llm", "gpt-3.5-turbo", 0.0, PromptVersion::V1, "body"));
        // Length prefixes keep field boundaries unambiguous.
        assert_ne!(
            cache_key("ab", "c", 0.0, PromptVersion::V0, "x"),
            cache_key("a", "bc", 0.0, PromptVersion::V0, "x")
        );
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        assert!(ResponseCache::load(&path).unwrap().is_empty());

        let cache = ResponseCache::new();
        cache.insert("b".into(), "Outage".into());
        cache.insert("a".into(), "line\nbreak".into());
        cache.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("{\"key\":\"a\""));

        let loaded = ResponseCache::load(&path).unwrap();
        assert_eq!(loaded.get("a").as_deref(), Some("line\nbreak"));
        assert_eq!(loaded.to_jsonl(), text);
    }

    #[test]
    fn malformed_line_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "{\"key\":\"a\",\"reply\":\"x\"}\nnot json\n").unwrap();
        assert!(matches!(
            ResponseCache::load(&path),
            Err(CacheError::Malformed { line_no: 2, .. })
        ));
    }

    #[test]
    fn concurrent_inserts() {
        let cache = Arc::new(ResponseCache::new());
        let handles: Vec<_> = (0..8)
            .map(|t| {
                let cache = Arc::clone(&cache);
                std::thread::spawn(move || {
                    for i in 0..100 {
                        cache.insert(format!("k{}", i % 50), format!("v{}", i % 50));
                        let _ = cache.get(&format!("k{t}"));
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(cache.len(), 50);
        assert_eq!(cache.get("k7").as_deref(), Some("v7"));
    }
}
