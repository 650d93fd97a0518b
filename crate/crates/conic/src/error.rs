use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("variable {0} is not declared in the program")]
    UnknownVariable(usize),

    #[error("entry ({row}, {col}) is outside variable `{name}` of dimension {dim}")]
    EntryOutOfRange {
        name: String,
        row: usize,
        col: usize,
        dim: usize,
    },

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("backend failure: {0}")]
    Backend(String),
}

pub type Result<T> = std::result::Result<T, ConicError>;
