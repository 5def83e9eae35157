use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENV_PREFIX: &str = "BUILDERKIT_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    /// NDJSON stream endpoint for toolkit agents.
    pub stream_addr: String,
    /// Admin HTTP API, WebSocket stream at /ws and static UI assets.
    pub http_addr: String,
    pub step_budget: u32,
    pub session_cap_minutes: u64,
    pub lease_minutes: u64,
    /// Filesystem store root; in-memory storage when absent.
    pub storage_root: Option<PathBuf>,
    pub palette: Option<PathBuf>,
    pub seed: Option<u64>,
    pub static_dir: Option<PathBuf>,
    pub tick_ms: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            stream_addr: "127.0.0.1:7700".into(),
            http_addr: "127.0.0.1:7701".into(),
            step_budget: 250,
            session_cap_minutes: 20,
            lease_minutes: 30,
            storage_root: None,
            palette: None,
            seed: None,
            static_dir: None,
            tick_ms: 1000,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ServerConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Reads `path` if given, then applies `BUILDERKIT_*` environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let base = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                Self::from_toml(&text)?
            }
            None => ServerConfig::default(),
        };
        base.with_env(std::env::vars())
    }

    /// Overrides any key `k` with the variable `BUILDERKIT_K` (upper case).
    /// Values are read as TOML scalars, falling back to plain strings.
    pub fn with_env(
        self,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut table = toml::Table::try_from(&self).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let keys = [
            "stream_addr",
            "http_addr",
            "step_budget",
            "session_cap_minutes",
            "lease_minutes",
            "storage_root",
            "palette",
            "seed",
            "static_dir",
            "tick_ms",
        ];
        for (name, value) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX).map(str::to_lowercase) else {
                continue;
            };
            if !keys.contains(&key.as_str()) {
                continue;
            }
            let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or(toml::Value::String(value));
            table.insert(key, parsed);
        }
        let cfg: ServerConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.step_budget == 0 {
            return Err(ConfigError::Invalid("step_budget must be positive".into()));
        }
        if self.session_cap_minutes == 0 || self.lease_minutes == 0 || self.tick_ms == 0 {
            return Err(ConfigError::Invalid("durations must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let cfg = ServerConfig::from_toml("step_budget = 10\nstream_addr = \"0.0.0.0:1\"").unwrap();
        assert_eq!(cfg.step_budget, 10);
        assert_eq!(cfg.lease_minutes, 30);
        let cfg = cfg
            .with_env([
                ("BUILDERKIT_STEP_BUDGET".to_string(), "7".to_string()),
                ("BUILDERKIT_STORAGE_ROOT".to_string(), "/tmp/x".to_string()),
                ("BUILDERKIT_SEED".to_string(), "42".to_string()),
                ("OTHER".to_string(), "1".to_string()),
            ])
            .unwrap();
        assert_eq!(cfg.step_budget, 7);
        assert_eq!(cfg.seed, Some(42));
        assert_eq!(cfg.storage_root, Some(PathBuf::from("/tmp/x")));
        assert_eq!(cfg.stream_addr, "0.0.0.0:1");
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ServerConfig::from_toml("step_budget = \"many\"").is_err());
        assert!(ServerConfig::default()
            .with_env([("BUILDERKIT_STEP_BUDGET".to_string(), "0".to_string())])
            .is_err());
    }
}
