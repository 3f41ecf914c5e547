use symdec_autodiff::AutodiffError;
use symdec_codes::CodeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite loss during {stage} at epoch {epoch}")]
    NonFinite { stage: &'static str, epoch: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate estimate: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CoreError::Dimension { expected, found })
    }
}
