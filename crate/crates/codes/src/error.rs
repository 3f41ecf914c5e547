use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("rows {0} and {1} anticommute")]
    NonCommuting(usize, usize),
    #[error("rows are linearly dependent: rank {rank} < {rows} rows")]
    DependentRows { rank: usize, rows: usize },
    #[error("unsupported code: {0}")]
    Unsupported(String),
    #[error("construction self-check failed: {0}")]
    Construction(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, CodeError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CodeError::DimensionMismatch { expected, found })
    }
}
