use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("matrix is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-deficient channel matrix: {0}")]
    RankDeficient(String),

    #[error("RCS profile: {0}")]
    Profile(String),

    #[error("problem is infeasible (binding constraints: {})", binding.join(", "))]
    Infeasible { binding: Vec<String> },

    #[error("solver trouble: {0}")]
    SolverTrouble(String),

    #[error(transparent)]
    Conic(#[from] disac_conic::ConicError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, CoreError>;
