//! Error type of the command-line front end and its exit codes.

use std::path::PathBuf;

use coxfuse_core::{FitError, GraphError, InferenceError, ModelError, PenaltyError, PredictError, SimulationError};

use crate::io::IoError;

/// Exit code for invalid input or configuration.
pub const EXIT_VALIDATION: i32 = 1;
/// Exit code for numerical failure.
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot access {path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn numerical(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        validation(e)
    }
}

impl From<PenaltyError> for CliError {
    fn from(e: PenaltyError) -> Self {
        validation(e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFiniteMean(_) => numerical(e),
            _ => validation(e),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Model(m) => m.into(),
            FitError::Diverged { .. } => numerical(e),
            _ => validation(e),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Model(m) => m.into(),
            InferenceError::SingularCovariance | InferenceError::Infeasible { .. } | InferenceError::NotConverged => {
                numerical(e)
            }
            _ => validation(e),
        }
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::Fit(f) => f.into(),
            PredictError::SingularBlock | PredictError::AllDiverged => numerical(e),
            _ => validation(e),
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Factorization => numerical(e),
            _ => validation(e),
        }
    }
}
