//! `key = value` run configuration. Command-line flags take precedence.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stargraph::optimize::OptimizerConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kmax: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub constraint_tol: Option<f64>,
    pub grad_tol: Option<f64>,
    pub penalty_growth: Option<f64>,
    pub max_outer: Option<usize>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills every field left unset in `self` from `fallback`.
    pub fn or(self, fallback: FileConfig) -> FileConfig {
        FileConfig {
            kmax: self.kmax.or(fallback.kmax),
            restarts: self.restarts.or(fallback.restarts),
            seed: self.seed.or(fallback.seed),
            constraint_tol: self.constraint_tol.or(fallback.constraint_tol),
            grad_tol: self.grad_tol.or(fallback.grad_tol),
            penalty_growth: self.penalty_growth.or(fallback.penalty_growth),
            max_outer: self.max_outer.or(fallback.max_outer),
            jobs: self.jobs.or(fallback.jobs),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let d = OptimizerConfig::default();
        let optimizer = OptimizerConfig {
            k_max: self.kmax.unwrap_or(d.k_max),
            restarts: self.restarts.unwrap_or(d.restarts),
            constraint_tol: self.constraint_tol.unwrap_or(d.constraint_tol),
            grad_tol: self.grad_tol.unwrap_or(d.grad_tol),
            penalty_growth: self.penalty_growth.unwrap_or(d.penalty_growth),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            seed: self.seed.unwrap_or(d.seed),
        };
        optimizer.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.jobs == Some(0) {
            return Err(CliError::Usage("jobs must be positive".into()));
        }
        Ok(RunConfig { optimizer, jobs: self.jobs })
    }
}

/// Effective settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub optimizer: OptimizerConfig,
    /// Worker threads; `None` uses one per core.
    pub jobs: Option<usize>,
}
