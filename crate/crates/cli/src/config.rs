//! Experiment configuration: JSON file, documented defaults, validation.

use std::path::{Path, PathBuf};

use idbm::sde::SdeConfig;
use idbm::{Network, Params};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::suites::Suite;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        /// Dotted path of the offending field, when known.
        field: Option<String>,
        message: String,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// A validated experiment.
///
/// Unset `nu_params`, `replicas`, `lambda_grid` and `probe_times` fall back
/// to the defaults of the selected suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub nu_params: Option<Params>,
    pub sde: SdeConfig,
    pub replicas: Option<usize>,
    pub lambda_grid: Vec<Vec<f64>>,
    pub probe_times: Vec<f64>,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suite: Suite::SampleBeta,
            nu_params: None,
            sde: SdeConfig::default(),
            replicas: None,
            lambda_grid: Vec::new(),
            probe_times: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn with_suite(suite: Suite) -> Self {
        Self {
            suite,
            ..Self::default()
        }
    }

    /// Checks every invariant that does not need the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::InvalidParams(m));
        if self.replicas == Some(0) {
            return invalid("replicas must be at least 1".into());
        }
        self.sde.validate().map_err(|e| ConfigError::InvalidParams(e.to_string()))?;
        if let Some(p) = &self.nu_params {
            if let Some(bad) = self.lambda_grid.iter().find(|l| l.len() != p.n()) {
                return invalid(format!("lambda_grid entry has length {}, expected {}", bad.len(), p.n()));
            }
        }
        if self.lambda_grid.iter().flatten().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return invalid("lambda_grid entries must be finite and nonnegative".into());
        }
        if self.probe_times.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return invalid("probe_times must be finite and positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. The output directory is left out
    /// so that runs written to different places can be compared.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:x}", Sha256::digest(bytes))
    }

    pub fn replicas_or(&self, default: usize) -> usize {
        self.replicas.unwrap_or(default)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    suite: Option<Suite>,
    #[serde(default)]
    nu_params: Option<RawParams>,
    #[serde(default)]
    sde: SdeConfig,
    #[serde(default)]
    replicas: Option<usize>,
    #[serde(default)]
    lambda_grid: Vec<Vec<f64>>,
    #[serde(default)]
    probe_times: Vec<f64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

/// Parameters as written in the file; validated after parsing so that a
/// violated invariant is reported as such rather than as a syntax error.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    network: RawNetwork,
    theta: Vec<f64>,
    #[serde(default)]
    eta: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(default)]
    n: Option<usize>,
    weights: Vec<Vec<f64>>,
}

impl RawParams {
    fn build(self) -> Result<Params, ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::InvalidParams(e.to_string());
        let n = self.network.n.unwrap_or(self.network.weights.len());
        let net = Network::new(n, &self.network.weights).map_err(|e| invalid(&e))?;
        let eta = self.eta.unwrap_or_else(|| vec![0.0; n]);
        Params::new(net, self.theta, eta).map_err(|e| invalid(&e))
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse {
        path: shown.clone(),
        line: 0,
        column: 0,
        field: None,
        message: e.to_string(),
    })?;
    parse_config_str(&text, &shown)
}

/// Parses config text; `origin` names the source in error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError::Parse {
            path: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field: (field != ".").then_some(field),
            message: inner.to_string(),
        }
    })?;
    let config = ExperimentConfig {
        suite: raw.suite.unwrap_or(Suite::SampleBeta),
        nu_params: raw.nu_params.map(RawParams::build).transpose()?,
        sde: raw.sde,
        replicas: raw.replicas,
        lambda_grid: raw.lambda_grid,
        probe_times: raw.probe_times,
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        seed: raw.seed,
    };
    config.validate()?;
    Ok(config)
}
