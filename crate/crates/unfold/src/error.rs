use std::path::PathBuf;

use thiserror::Error;

use unfold_core::boundary::BoundaryError;
use unfold_core::discretize::GraphError;
use unfold_core::hyperbolicity::HyperbolicityError;
use unfold_core::metricspace::MetricError;
use unfold_core::models::ModelError;
use unfold_core::sigma::SigmaError;
use unfold_core::uniformity::UniformityError;
use unfold_core::whitney::WhitneyError;

use crate::off::OffError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Off { path: PathBuf, source: OffError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Uniformity(#[from] UniformityError),
    #[error(transparent)]
    Hyperbolicity(#[from] HyperbolicityError),
    #[error(transparent)]
    Whitney(#[from] WhitneyError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    /// Checks ran but some failed beyond tolerance.
    #[error("{} violation(s):\n  {}", .0.len(), .0.join("\n  "))]
    Violations(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violations(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> CliError {
        CliError::Parse { path: path.into(), message: message.to_string() }
    }
}
