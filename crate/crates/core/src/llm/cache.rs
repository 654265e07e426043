use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dashmap::DashMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::llm::{CompletionRequest, LlmError};

/// Content address of a request: model, prompt, temperature and token limit.
pub fn cache_key(req: &CompletionRequest) -> String {
    let mut h = Sha256::new();
    for part in [
        req.params.model_id.as_bytes(),
        req.rendered_prompt.as_bytes(),
        &req.params.temperature.to_bits().to_le_bytes(),
        &req.params.max_tokens.to_le_bytes(),
    ] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    model_id: String,
    template_id: String,
    text: String,
}

/// In-memory response cache, optionally mirrored to one file per key in a
/// directory. Files are written to a temporary name and renamed into place, so
/// a reader sees either nothing or a complete entry.
#[derive(Debug, Default)]
pub struct ResponseCache {
    memory: DashMap<String, String>,
    dir: Option<PathBuf>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| LlmError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            memory: DashMap::new(),
            dir: Some(dir),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        if let Some(v) = self.memory.get(key) {
            return Some(v.clone());
        }
        let path = self.path(key)?;
        let raw = fs::read_to_string(path).ok()?;
        let entry: CacheEntry = serde_json::from_str(&raw).ok()?;
        (entry.key == key).then(|| {
            self.memory.insert(key.to_string(), entry.text.clone());
            entry.text
        })
    }

    /// Stores a response. Existing entries are kept unless `replace` is set.
    pub fn put(&self, key: &str, req: &CompletionRequest, text: &str, replace: bool) -> Result<(), LlmError> {
        if !replace && self.memory.contains_key(key) {
            return Ok(());
        }
        self.memory.insert(key.to_string(), text.to_string());
        let Some(path) = self.path(key) else {
            return Ok(());
        };
        if !replace && path.exists() {
            return Ok(());
        }
        let entry = CacheEntry {
            key: key.to_string(),
            model_id: req.params.model_id.clone(),
            template_id: req.template_id.clone(),
            text: text.to_string(),
        };
        let dir = self.dir.as_ref().expect("path implies dir");
        let err = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", path.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
        serde_json::to_writer(&mut tmp, &entry).map_err(|e| LlmError::Cache(e.to_string()))?;
        tmp.flush().map_err(err)?;
        if replace {
            tmp.persist(&path).map_err(|e| err(e.error))?;
        } else if let Err(e) = tmp.persist_noclobber(&path) {
            // lost a race with another writer of the same key; theirs stands
            if !path.exists() {
                return Err(err(e.error));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.memory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memory.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::CompletionParams;

    fn req(model: &str, prompt: &str, t: f64) -> CompletionRequest {
        CompletionRequest::new(
            "one_span",
            prompt,
            CompletionParams {
                temperature: t,
                max_tokens: 64,
                model_id: model.into(),
            },
        )
    }

    #[test]
    fn key_depends_on_every_field() {
        let base = cache_key(&req("m", "p", 0.0));
        assert_ne!(base, cache_key(&req("m2", "p", 0.0)));
        assert_ne!(base, cache_key(&req("m", "p2", 0.0)));
        assert_ne!(base, cache_key(&req("m", "p", 0.3)));
        let mut r = req("m", "p", 0.0);
        r.params.max_tokens = 65;
        assert_ne!(base, cache_key(&r));
        r = req("m", "p", 0.0);
        r.template_id = "other".into();
        assert_eq!(base, cache_key(&r));
    }

    #[test]
    fn dir_cache_survives_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let r = req("m", "p", 0.0);
        let k = cache_key(&r);
        ResponseCache::with_dir(dir.path()).unwrap().put(&k, &r, "hello", false).unwrap();
        let reopened = ResponseCache::with_dir(dir.path()).unwrap();
        assert_eq!(reopened.get(&k).as_deref(), Some("hello"));
        reopened.put(&k, &r, "ignored", false).unwrap();
        assert_eq!(ResponseCache::with_dir(dir.path()).unwrap().get(&k).as_deref(), Some("hello"));
        reopened.put(&k, &r, "fresh", true).unwrap();
        assert_eq!(ResponseCache::with_dir(dir.path()).unwrap().get(&k).as_deref(), Some("fresh"));
    }
}
