//! Service configuration file and its environment override.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;
use ticketflow_core::{ConfigError, PipelineConfig};

pub const LISTEN_ENV: &str = "TICKETFLOW_LISTEN";
pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, Error)]
pub enum ServiceConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Pipeline(#[from] ConfigError),
    #[error("listen address {0:?} is not host:port")]
    Listen(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// Warehouse directory; without one the store lives in memory.
    pub data_dir: Option<PathBuf>,
    pub snapshot_every: usize,
    /// Default page size of the audit queue.
    pub queue_limit: usize,
    pub pipeline: PipelineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: DEFAULT_LISTEN.to_string(),
            data_dir: None,
            snapshot_every: 1000,
            queue_limit: 50,
            pipeline: PipelineConfig::default(),
        }
    }
}

pub const MAX_QUEUE_LIMIT: usize = 1000;

impl ServiceConfig {
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, ServiceConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| ServiceConfigError::Parse {
            path: origin.to_string(),
            message: format!("{}: {}", e.path(), e.inner()),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ServiceConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    /// Apply `TICKETFLOW_LISTEN` when set.
    pub fn with_env(mut self) -> Result<Self, ServiceConfigError> {
        if let Ok(listen) = std::env::var(LISTEN_ENV) {
            if !listen.trim().is_empty() {
                self.listen = listen.trim().to_string();
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ServiceConfigError> {
        self.pipeline.validate()?;
        match self.listen.rsplit_once(':') {
            Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => {}
            _ => return Err(ServiceConfigError::Listen(self.listen.clone())),
        }
        if self.queue_limit == 0 || self.queue_limit > MAX_QUEUE_LIMIT {
            return Err(ServiceConfigError::Parse {
                path: "queue_limit".into(),
                message: format!("must lie in 1..={MAX_QUEUE_LIMIT}"),
            });
        }
        Ok(())
    }
}
