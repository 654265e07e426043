//! TOML configuration with environment overrides.
//!
//! ```toml
//! [detection]
//! strategy = "sentence"
//! tagger = "pattern"
//!
//! [llm]
//! model_id = "gpt-4"
//! max_concurrency = 4
//! cache_dir = ".cache/llm"
//! log_prompts = false
//!
//! [service]
//! port = 8080
//! cors_origins = ["http://localhost:5173"]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect::DetectConfig;
use crate::llm::LlmConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid value for {key}: {value:?}")]
    Env { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub cors_origins: Vec<String>,
    /// Shared bearer token. Requests need it only when set.
    pub token: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            cors_origins: Vec::new(),
            token: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AppConfig {
    pub detection: DetectConfig,
    pub llm: LlmConfig,
    pub service: ServiceConfig,
}

/// Environment variables read by `apply_env`.
pub const ENV_KEYS: &[&str] = &[
    "DISCLOSE_DETECTION_STRATEGY",
    "DISCLOSE_DETECTION_TAGGER",
    "DISCLOSE_LLM_MODEL_ID",
    "DISCLOSE_LLM_PROVIDER",
    "DISCLOSE_LLM_MAX_CONCURRENCY",
    "DISCLOSE_LLM_CACHE_DIR",
    "DISCLOSE_LLM_LOG_PROMPTS",
    "DISCLOSE_SERVICE_PORT",
    "DISCLOSE_SERVICE_TOKEN",
];

impl AppConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Read {
            path: "<string>".into(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Applies `DISCLOSE_*` overrides from `lookup` (normally `std::env::var`).
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::Env {
                key: key.into(),
                value: v.into(),
            })
        }
        for key in ENV_KEYS {
            let Some(v) = lookup(key) else { continue };
            match *key {
                "DISCLOSE_DETECTION_STRATEGY" => self.detection.strategy = parse(key, &v)?,
                "DISCLOSE_DETECTION_TAGGER" => self.detection.tagger = v,
                "DISCLOSE_LLM_MODEL_ID" => self.llm.model_id = v,
                "DISCLOSE_LLM_PROVIDER" => self.llm.provider = v,
                "DISCLOSE_LLM_MAX_CONCURRENCY" => self.llm.max_concurrency = parse(key, &v)?,
                "DISCLOSE_LLM_CACHE_DIR" => self.llm.cache_dir = Some(v.into()),
                "DISCLOSE_LLM_LOG_PROMPTS" => self.llm.log_prompts = parse(key, &v)?,
                "DISCLOSE_SERVICE_PORT" => self.service.port = parse(key, &v)?,
                "DISCLOSE_SERVICE_TOKEN" => self.service.token = Some(v),
                _ => unreachable!("listed in ENV_KEYS"),
            }
        }
        Ok(())
    }

    /// Config file (if any) plus process environment.
    pub fn resolve(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::SegmentStrategy;
    use std::collections::HashMap;

    #[test]
    fn defaults() {
        let c = AppConfig::default();
        assert_eq!(c.llm.max_concurrency, 4);
        assert!(!c.llm.log_prompts);
        assert_eq!(c.detection.strategy, SegmentStrategy::Sentence);
        assert_eq!(c.service.port, 8080);
    }

    #[test]
    fn partial_toml() {
        let c = AppConfig::from_toml_str(
            "[detection]\nstrategy = \"words128\"\n[llm]\nmodel_id = \"local\"\n[service]\ncors_origins = [\"http://x\"]\n",
        )
        .unwrap();
        assert_eq!(c.detection.strategy, SegmentStrategy::Words128);
        assert_eq!(c.detection.tagger, "pattern");
        assert_eq!(c.llm.model_id, "local");
        assert_eq!(c.service.cors_origins, ["http://x"]);
    }

    #[test]
    fn env_overrides() {
        let env: HashMap<&str, &str> =
            HashMap::from([("DISCLOSE_SERVICE_PORT", "9000"), ("DISCLOSE_LLM_LOG_PROMPTS", "true")]);
        let mut c = AppConfig::default();
        c.apply_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(c.service.port, 9000);
        assert!(c.llm.log_prompts);
        let bad: HashMap<&str, &str> = HashMap::from([("DISCLOSE_SERVICE_PORT", "x")]);
        assert!(c.apply_env(|k| bad.get(k).map(|v| v.to_string())).is_err());
    }
}
