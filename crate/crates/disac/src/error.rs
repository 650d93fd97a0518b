use std::path::PathBuf;

use disac_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DisacError {
    #[error("experiment spec {path}: {message}")]
    Spec { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, DisacError>;

impl DisacError {
    pub fn spec(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        DisacError::Spec {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DisacError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for infeasible experiments, 3 for solver
    /// trouble, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            DisacError::Core(CoreError::Infeasible { .. }) => 2,
            DisacError::Core(CoreError::SolverTrouble(_)) => 3,
            _ => 1,
        }
    }
}
