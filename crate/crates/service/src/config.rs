//! TOML service configuration. Relative paths are resolved against the
//! directory holding the config file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    pub snapshot: PathBuf,
    /// Directory the snapshot was built from. Optional; checked when given.
    pub corpus: Option<PathBuf>,
    pub exemplars: PathBuf,
    /// Origins allowed to call the API from a browser. Empty disables CORS.
    #[serde(default)]
    pub cors_allow: Vec<String>,
    #[serde(default)]
    pub limits: Limits,
    pub llm: LlmConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    pub max_rows: usize,
    pub timeout_ms: u64,
    pub few_shots: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_rows: hazardchat_core::cypher::DEFAULT_MAX_ROWS,
            timeout_ms: hazardchat_core::cypher::DEFAULT_TIMEOUT.as_millis() as u64,
            few_shots: hazardchat_core::rag::DEFAULT_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LlmConfig {
    Stub { script: PathBuf },
    Remote(RemoteSettings),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    #[default]
    Offline,
    Remote(RemoteSettings),
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteSettings {
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: Option<String>,
    #[serde(default = "default_remote_timeout")]
    pub timeout_ms: u64,
}

fn default_remote_timeout() -> u64 {
    30_000
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("{what} {path} does not exist")]
    MissingPath { what: &'static str, path: PathBuf },
    #[error("environment variable {0} is not set")]
    MissingSecret(String),
}

impl RemoteSettings {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn api_key(&self) -> Result<Option<String>, ConfigError> {
        match &self.api_key_env {
            None => Ok(None),
            Some(var) => std::env::var(var).map(Some).map_err(|_| ConfigError::MissingSecret(var.clone())),
        }
    }
}

impl Limits {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

impl ServiceConfig {
    pub fn parse(text: &str, base: &Path) -> Result<ServiceConfig, ConfigError> {
        let mut cfg: ServiceConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Invalid { path: base.to_path_buf(), message: e.to_string() })?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.snapshot);
        resolve(&mut cfg.exemplars);
        if let Some(c) = cfg.corpus.as_mut() {
            resolve(c);
        }
        if let LlmConfig::Stub { script } = &mut cfg.llm {
            resolve(script);
        }
        if cfg.limits.few_shots == 0 {
            return Err(ConfigError::Invalid {
                path: base.to_path_buf(),
                message: "limits.few_shots must be at least 1".into(),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ServiceConfig, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        ServiceConfig::parse(&text, base).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::Invalid { path: path.to_path_buf(), message },
            other => other,
        })
    }

    /// Fails on the first configured path that does not exist.
    pub fn check_paths(&self) -> Result<(), ConfigError> {
        let mut paths = vec![("snapshot", &self.snapshot), ("exemplar file", &self.exemplars)];
        if let Some(c) = &self.corpus {
            paths.push(("corpus directory", c));
        }
        if let LlmConfig::Stub { script } = &self.llm {
            paths.push(("stub script", script));
        }
        for (what, path) in paths {
            if !path.exists() {
                return Err(ConfigError::MissingPath { what, path: path.clone() });
            }
        }
        Ok(())
    }
}
