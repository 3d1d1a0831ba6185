//! Engine configuration.
//!
//! Values layer in increasing precedence: built-in defaults, then an
//! `aits.toml` config file, then `AITS_*` environment variables, then
//! command-line flags. Paths are checked at use, not at load.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::aggregate::DEFAULT_GAP_THRESHOLD;

pub const DEFAULT_TIMEOUT_SECONDS: u64 = 300;
pub const DEFAULT_MAX_PARALLEL_TOOLS: usize = 4;
pub const DEFAULT_OUTPUT_DIR: &str = "aits-out";

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub ontology_path: Option<PathBuf>,
    pub catalogue_paths: Vec<PathBuf>,
    pub timeout_seconds: u64,
    pub max_parallel_tools: usize,
    pub gap_threshold: f64,
    pub output_dir: PathBuf,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            ontology_path: None,
            catalogue_paths: Vec::new(),
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
            max_parallel_tools: DEFAULT_MAX_PARALLEL_TOOLS,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        }
    }
}

/// Flag-level overrides, all optional.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub ontology_path: Option<PathBuf>,
    pub catalogue_paths: Vec<PathBuf>,
    pub timeout_seconds: Option<u64>,
    pub max_parallel_tools: Option<usize>,
    pub gap_threshold: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config `{path}` is invalid: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("environment variable {name} is invalid: {message}")]
    Env { name: String, message: String },
    #[error("{field} must be {constraint}")]
    OutOfBounds { field: &'static str, constraint: &'static str },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    ontology_path: Option<PathBuf>,
    catalogue_paths: Option<Vec<PathBuf>>,
    timeout_seconds: Option<u64>,
    max_parallel_tools: Option<usize>,
    gap_threshold: Option<f64>,
    output_dir: Option<PathBuf>,
}

impl EngineConfig {
    /// Layer defaults, config file, environment and flag overrides.
    /// `file` falls back to `./aits.toml` when present.
    pub fn load(file: Option<&Path>, overrides: &ConfigOverrides) -> Result<EngineConfig, ConfigError> {
        let env: BTreeMap<String, String> = std::env::vars()
            .filter(|(k, _)| k.starts_with("AITS_"))
            .collect();
        EngineConfig::load_with_env(file, &env, overrides)
    }

    pub fn load_with_env(
        file: Option<&Path>,
        env: &BTreeMap<String, String>,
        overrides: &ConfigOverrides,
    ) -> Result<EngineConfig, ConfigError> {
        let mut config = EngineConfig::default();

        let default_file = PathBuf::from("aits.toml");
        let file = match file {
            Some(path) => Some(path.to_path_buf()),
            None if default_file.exists() => Some(default_file),
            None => None,
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError::Io { path: path.clone(), source: e })?;
            let parsed: FileConfig = toml::from_str(&text)
                .map_err(|e| ConfigError::Parse { path: path.clone(), message: e.to_string() })?;
            if let Some(v) = parsed.ontology_path {
                config.ontology_path = Some(v);
            }
            if let Some(v) = parsed.catalogue_paths {
                config.catalogue_paths = v;
            }
            if let Some(v) = parsed.timeout_seconds {
                config.timeout_seconds = v;
            }
            if let Some(v) = parsed.max_parallel_tools {
                config.max_parallel_tools = v;
            }
            if let Some(v) = parsed.gap_threshold {
                config.gap_threshold = v;
            }
            if let Some(v) = parsed.output_dir {
                config.output_dir = v;
            }
        }

        let env_parse = |name: &str| -> Option<&String> { env.get(name) };
        if let Some(v) = env_parse("AITS_ONTOLOGY_PATH") {
            config.ontology_path = Some(PathBuf::from(v));
        }
        if let Some(v) = env_parse("AITS_CATALOGUE_PATHS") {
            config.catalogue_paths = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(PathBuf::from)
                .collect();
        }
        if let Some(v) = env_parse("AITS_TIMEOUT_SECONDS") {
            config.timeout_seconds = v.parse().map_err(|_| ConfigError::Env {
                name: "AITS_TIMEOUT_SECONDS".into(),
                message: format!("`{v}` is not a positive integer"),
            })?;
        }
        if let Some(v) = env_parse("AITS_MAX_PARALLEL_TOOLS") {
            config.max_parallel_tools = v.parse().map_err(|_| ConfigError::Env {
                name: "AITS_MAX_PARALLEL_TOOLS".into(),
                message: format!("`{v}` is not a positive integer"),
            })?;
        }
        if let Some(v) = env_parse("AITS_GAP_THRESHOLD") {
            config.gap_threshold = v.parse().map_err(|_| ConfigError::Env {
                name: "AITS_GAP_THRESHOLD".into(),
                message: format!("`{v}` is not a number"),
            })?;
        }
        if let Some(v) = env_parse("AITS_OUTPUT_DIR") {
            config.output_dir = PathBuf::from(v);
        }

        if let Some(v) = &overrides.ontology_path {
            config.ontology_path = Some(v.clone());
        }
        if !overrides.catalogue_paths.is_empty() {
            config.catalogue_paths = overrides.catalogue_paths.clone();
        }
        if let Some(v) = overrides.timeout_seconds {
            config.timeout_seconds = v;
        }
        if let Some(v) = overrides.max_parallel_tools {
            config.max_parallel_tools = v;
        }
        if let Some(v) = overrides.gap_threshold {
            config.gap_threshold = v;
        }
        if let Some(v) = &overrides.output_dir {
            config.output_dir = v.clone();
        }

        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.timeout_seconds == 0 {
            return Err(ConfigError::OutOfBounds {
                field: "timeout_seconds",
                constraint: "a positive integer",
            });
        }
        if self.max_parallel_tools == 0 {
            return Err(ConfigError::OutOfBounds {
                field: "max_parallel_tools",
                constraint: "a positive integer",
            });
        }
        if !(0.0..=1.0).contains(&self.gap_threshold) || !self.gap_threshold.is_finite() {
            return Err(ConfigError::OutOfBounds {
                field: "gap_threshold",
                constraint: "a fraction between 0 and 1",
            });
        }
        Ok(())
    }
}
