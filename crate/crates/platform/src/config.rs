//! Deployment configuration, read from a TOML file.
//!
//! ```toml
//! store_path = "incidents.jsonl"
//! gating = "enforcing"          # or "advisory"
//! fsync = true
//! extra_regions = ["LATAM"]
//!
//! [significance]
//! price_deviation_threshold_pct = 5.0
//! volume_anomaly_threshold_pct = 20.0
//!
//! [redaction]
//! bucket_edges = [0.0, 50.0, 100.0, 200.0]
//! strict_mode = true
//! denylist = ["Acme Capital"]
//! rounding = 1
//!
//! [server]
//! addr = "127.0.0.1:8080"
//! ```
//!
//! The file path comes from `--config`, else `INCIDENTDB_CONFIG`, else
//! `incidentdb.toml` in the working directory if present; otherwise all
//! defaults apply.

use std::path::{Path, PathBuf};

use incidentdb_core::confidentiality::RedactionPolicy;
use incidentdb_core::model::Schema;
use incidentdb_core::significance::SignificancePolicy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CONFIG_ENV: &str = "INCIDENTDB_CONFIG";
pub const DEFAULT_CONFIG_FILE: &str = "incidentdb.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Gating {
    /// Insignificant incidents are rejected.
    #[default]
    Enforcing,
    /// Insignificant incidents are stored and logged.
    Advisory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub addr: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { addr: "127.0.0.1:8080".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub store_path: PathBuf,
    pub gating: Gating,
    /// Flush each append to disk before acknowledging it.
    pub fsync: bool,
    pub extra_regions: Vec<String>,
    pub significance: SignificancePolicy,
    pub redaction: RedactionPolicy,
    pub server: ServerConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            store_path: PathBuf::from("incidents.jsonl"),
            gating: Gating::Enforcing,
            fsync: true,
            extra_regions: Vec::new(),
            significance: SignificancePolicy::default(),
            redaction: RedactionPolicy::default(),
            server: ServerConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Config, ConfigError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Config::from_toml_str(&text, path)
    }

    /// Resolves the config file as described in the module docs.
    pub fn load(explicit: Option<&Path>) -> Result<Config, ConfigError> {
        if let Some(p) = explicit {
            return Config::from_file(p);
        }
        if let Some(p) = std::env::var_os(CONFIG_ENV) {
            return Config::from_file(Path::new(&p));
        }
        let default = Path::new(DEFAULT_CONFIG_FILE);
        if default.is_file() {
            return Config::from_file(default);
        }
        Ok(Config::default())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.significance.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.redaction.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.schema().map(|_| ())
    }

    pub fn schema(&self) -> Result<Schema, ConfigError> {
        let schema = Schema::with_regions(self.extra_regions.iter().cloned());
        for r in &self.extra_regions {
            schema.parse_region(r).map_err(|e| ConfigError::Invalid(format!("extra_regions: {e}")))?;
        }
        Ok(schema)
    }
}
