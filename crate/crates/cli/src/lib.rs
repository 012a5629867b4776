//! Reproducible experiment runner: configuration, suite execution and
//! artifact export.

pub mod artifacts;
pub mod config;
pub mod suites;

use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

use artifacts::{render_reports, write_all, Provenance, VERSION};
pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig};
pub use suites::{Outcome, SampleCache, Suite};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write artifacts to {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("suite {suite} aborted: {message}")]
    Numerical { suite: &'static str, message: String },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Output { .. } => EXIT_USAGE,
            RunError::Numerical { .. } => EXIT_NUMERICAL,
        }
    }

    /// Machine-readable form for stderr.
    pub fn diagnostic(&self) -> serde_json::Value {
        match self {
            RunError::Config(ConfigError::Parse {
                path,
                line,
                column,
                field,
                message,
            }) => json!({
                "error": "parse", "path": path, "line": line, "column": column,
                "field": field, "message": message,
            }),
            RunError::Config(ConfigError::InvalidParams(m)) => json!({ "error": "invalid-params", "message": m }),
            RunError::Output { path, source } => {
                json!({ "error": "output", "path": path, "message": source.to_string() })
            }
            RunError::Numerical { suite, message } => {
                json!({ "error": "numerical", "suite": suite, "message": message })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub suite: Suite,
    pub outcome: Outcome,
    /// Written files, in rendering order.
    pub files: Vec<PathBuf>,
}

impl SuiteRun {
    pub fn passed(&self) -> bool {
        self.outcome.passed()
    }
}

pub fn provenance(config: &ExperimentConfig) -> Provenance {
    Provenance {
        config_hash: config.hash(),
        seed: config.seed,
        version: VERSION,
    }
}

/// Every file of a suite's output directory, as bytes.
pub fn render(outcome: &Outcome, prov: &Provenance) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = outcome
        .artifacts
        .iter()
        .map(|a| (a.file().to_string(), a.render(prov)))
        .collect();
    files.push(("reports.jsonl".into(), render_reports(&outcome.reports, prov)));
    let failed: Vec<&str> = outcome
        .reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.name.as_str())
        .collect();
    let summary = json!({
        "provenance": prov,
        "passed": outcome.passed(),
        "reports": outcome.reports.len(),
        "failed": failed,
    });
    let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    bytes.push(b'\n');
    files.push(("summary.json".into(), bytes));
    files
}

/// Runs `config.suite` and writes its artifacts under `output_dir/<suite>`.
pub fn run_suite(config: &ExperimentConfig, workers: Option<usize>) -> Result<SuiteRun, RunError> {
    let mut runs = run_suites(config, &[config.suite], workers)?;
    Ok(runs.remove(0))
}

/// Runs several suites in order; beta samples are shared between them.
pub fn run_suites(config: &ExperimentConfig, list: &[Suite], workers: Option<usize>) -> Result<Vec<SuiteRun>, RunError> {
    config.validate()?;
    let cache = SampleCache::default();
    let mut runs = Vec::new();
    for &suite in list {
        let config = ExperimentConfig {
            suite,
            ..config.clone()
        };
        let ctx = suites::Ctx {
            config: &config,
            workers,
            cache: &cache,
        };
        let outcome = suites::execute(suite, &ctx).map_err(|e| RunError::Numerical {
            suite: suite.name(),
            message: e.to_string(),
        })?;
        let dir = config.output_dir.join(suite.name());
        let files = render(&outcome, &provenance(&config));
        write_all(&dir, &files).map_err(|source| RunError::Output {
            path: dir.clone(),
            source,
        })?;
        runs.push(SuiteRun {
            suite,
            outcome,
            files: files.into_iter().map(|(name, _)| dir.join(name)).collect(),
        });
    }
    Ok(runs)
}

/// Exit status for completed runs: pass only if every verdict passed.
pub fn exit_code(runs: &[SuiteRun]) -> i32 {
    if runs.iter().all(SuiteRun::passed) {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
