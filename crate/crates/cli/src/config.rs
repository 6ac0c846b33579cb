//! Run configuration files and the built-in experiment configs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vage::experiments::{self, DEFAULT_HORIZON, DEFAULT_ITERATIONS};
use vage::network::{CacheNetwork, NetworkSpec, NodeId};
use vage::simulator::Estimator;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error in {file} at `{field}` (line {line}, column {column}): {message}")]
    Parse { file: String, field: String, line: usize, column: usize, message: String },
    #[error("{0}")]
    Invalid(#[from] vage::Error),
}

impl ConfigError {
    pub fn parse(file: &str, field: String, err: serde_json::Error) -> Self {
        let (line, column) = (err.line(), err.column());
        let message = err.to_string();
        let message = message.strip_suffix(&format!(" at line {line} column {column}")).unwrap_or(&message);
        ConfigError::Parse { file: file.to_string(), field, line, column, message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: NetworkSpec,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default, alias = "master_seed")]
    pub seed: u64,
    /// Defaults to every leaf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<String>>,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_horizon() -> f64 {
    DEFAULT_HORIZON
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

impl RunConfig {
    pub fn new(network: NetworkSpec) -> Self {
        Self {
            network,
            horizon: DEFAULT_HORIZON,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            targets: None,
            estimator: Estimator::Terminal,
            output: None,
        }
    }

    pub fn parse(text: &str, file: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            ConfigError::parse(file, field, e.into_inner())
        })?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), vage::Error> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(vage::Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.iterations == 0 {
            return Err(vage::Error::InvalidParameter("iterations must be at least 1".into()));
        }
        let net = CacheNetwork::new(&self.network)?;
        self.resolve_targets(&net)?;
        Ok(())
    }

    /// Loads a file, or one of the built-in names `fig5`, `fig6`, `fig7`.
    pub fn load(name_or_path: &str) -> Result<Self, ConfigError> {
        let path = Path::new(name_or_path);
        if !path.exists() {
            if let Some(builtin) = builtin(name_or_path) {
                return Ok(builtin);
            }
        }
        let text =
            fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name_or_path.to_string(), source })?;
        Self::parse(&text, name_or_path)
    }

    pub fn resolve_targets(&self, net: &CacheNetwork) -> Result<Vec<NodeId>, vage::Error> {
        match &self.targets {
            Some(names) => names.iter().map(|n| net.node(n)).collect(),
            None => {
                let leaves = net.leaves();
                Ok(if leaves.is_empty() { vec![net.source()] } else { leaves })
            }
        }
    }

    /// The config as it will run, without the output location.
    pub fn normalized(&self, net: &CacheNetwork) -> Self {
        Self { network: net.to_spec(), output: None, ..self.clone() }
    }
}

/// Built-in configs: the 3-hop heterogeneous chain at m = 1/3, the 4-hop
/// Uniform(0, 2) chain, and the 4-hop unit-mean uniform chain at v = 1/4.
pub fn builtin(name: &str) -> Option<RunConfig> {
    let network = match name.trim_end_matches(".json") {
        "fig5" => experiments::source_mean_network(1.0 / 3.0),
        "fig6" => experiments::hop_count_network(4),
        "fig7" => experiments::link_variance_network(0.25).expect("valid variance"),
        _ => return None,
    };
    Some(RunConfig::new(network))
}
