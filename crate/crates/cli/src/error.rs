use symdec_autodiff::AutodiffError;
use symdec_codes::CodeError;
use symdec_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        CliError::Core(CoreError::Code(e))
    }
}

impl From<AutodiffError> for CliError {
    fn from(e: AutodiffError) -> Self {
        CliError::Core(CoreError::Autodiff(e))
    }
}

impl CliError {
    /// 0 success, 1 validation/config, 2 numeric, 3 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Core(CoreError::NonFinite { .. }) => 2,
            CliError::Core(CoreError::Autodiff(AutodiffError::Numeric(_))) => 2,
            CliError::Core(CoreError::Resource(_)) => 3,
            CliError::Core(CoreError::Code(CodeError::Resource(_))) => 3,
            _ => 1,
        }
    }
}
