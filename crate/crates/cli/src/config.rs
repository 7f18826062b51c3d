//! The declarative pipeline config (TOML) and its flag overrides.
//!
//! One file describes a reproducible run: named backends, chain settings,
//! knowledge-base mode, cache/output directories, generation adapters, and
//! the root seed. Command-line flags always win over file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chimera_core::latent::OptimizationConfig;
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

/// Derive a component seed from the root seed, stably across runs and
/// platforms (FNV-1a over the label, mixed with the root).
pub fn split_seed(root: u64, label: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ root;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BackendConfig {
    /// Deterministic prompt table loaded from a JSON file.
    Table { path: PathBuf },
    /// Line-delimited JSON subprocess wrapping a real model.
    Subprocess {
        command: Vec<String>,
        #[serde(default)]
        cased: bool,
        #[serde(default)]
        suffix_only: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KbMode {
    Fixture,
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KbConfig {
    pub mode: KbMode,
    pub fixture_path: Option<PathBuf>,
    pub base_url: String,
    /// Minimum milliseconds between live requests.
    pub rate_limit_ms: u64,
    /// Relation allowlist; `None` keeps the built-in default.
    pub relations: Option<Vec<String>>,
}

impl Default for KbConfig {
    fn default() -> Self {
        Self {
            mode: KbMode::Fixture,
            fixture_path: None,
            base_url: "https://api.conceptnet.io".to_string(),
            rate_limit_ms: 1000,
            relations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub kind: String,
    pub attribute: String,
    pub k: usize,
    pub m: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            kind: "simile".to_string(),
            attribute: "shape".to_string(),
            k: 5,
            m: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    /// Named (generator, scorer) adapter pair.
    pub pair: String,
    pub optimizer: OptimizerConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            pair: "toy-identity".to_string(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// [`OptimizationConfig`] with the seed optional: when unset, the root seed
/// is split with the label "latent-ascent".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub step_size: Option<f64>,
    pub max_iters: Option<usize>,
    pub prior_weight: Option<f64>,
    pub stop_tol: Option<f64>,
    pub seed: Option<u64>,
}

impl OptimizerConfig {
    pub fn resolve(&self, root_seed: u64) -> OptimizationConfig {
        let d = OptimizationConfig::default();
        OptimizationConfig {
            step_size: self.step_size.unwrap_or(d.step_size),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            prior_weight: self.prior_weight.unwrap_or(d.prior_weight),
            stop_tol: self.stop_tol.unwrap_or(d.stop_tol),
            seed: self
                .seed
                .unwrap_or_else(|| split_seed(root_seed, "latent-ascent")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    /// Registry JSON overriding the built-in prompt templates.
    pub templates_path: Option<PathBuf>,
    pub default_backend: Option<String>,
    pub backends: BTreeMap<String, BackendConfig>,
    pub chain: ChainConfig,
    pub kb: KbConfig,
    pub generation: GenerationConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            cache_dir: PathBuf::from(".chimera-cache"),
            templates_path: None,
            default_backend: None,
            backends: BTreeMap::new(),
            chain: ChainConfig::default(),
            kb: KbConfig::default(),
            generation: GenerationConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))
    }

    /// The backend to use: explicit selection, else the configured default,
    /// else the sole configured backend.
    pub fn select_backend<'a>(
        &'a self,
        selection: Option<&'a str>,
    ) -> Result<(&'a str, &'a BackendConfig), CliError> {
        let name = match selection.or(self.default_backend.as_deref()) {
            Some(name) => name,
            None if self.backends.len() == 1 => {
                self.backends.keys().next().map(String::as_str).unwrap()
            }
            None => {
                return Err(CliError::input(
                    "no backend selected: pass --backend/--table-backend or set default_backend in the config",
                ))
            }
        };
        let cfg = self.backends.get(name).ok_or_else(|| {
            CliError::input(format!(
                "unknown backend {name:?}: not in the config's [backends] table"
            ))
        })?;
        Ok((name, cfg))
    }
}
