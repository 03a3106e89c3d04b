use serde_json::json;
use stargraph::analysis::AnalysisError;
use stargraph::forced::ForcedError;
use stargraph::optimize::OptimizeError;
use stargraph::phase::PhaseError;
use stargraph::GraphonError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Diagnostic JSON, printed to stdout.
    #[error("infeasible constraints")]
    Infeasible(serde_json::Value),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A verification ran to completion and reported a failure.
    #[error("{0}")]
    CheckFailed(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) | CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Infeasible { residual, ref detail } => CliError::Infeasible(json!({
                "error": "infeasible",
                "smallest_violation": residual,
                "detail": detail,
            })),
            OptimizeError::MaxIterations(_) | OptimizeError::Diagnostic(_) => CliError::Numerical(e.to_string()),
            OptimizeError::Constraints(_) | OptimizeError::Config(_) | OptimizeError::Phase(_) | OptimizeError::Graphon(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GraphonError> for CliError {
    fn from(e: GraphonError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Optimize(o) => o.into(),
            AnalysisError::Csv(c) => CliError::Io(c.to_string()),
            AnalysisError::Domain(_) | AnalysisError::Phase(_) => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ForcedError> for CliError {
    fn from(e: ForcedError) -> Self {
        match e {
            ForcedError::Optimize(o) => o.into(),
            ForcedError::Csv(c) => CliError::Io(c.to_string()),
            ForcedError::Domain(_) | ForcedError::Graphon(_) => CliError::Usage(e.to_string()),
        }
    }
}
