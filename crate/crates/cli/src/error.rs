use std::path::Path;

use qaoa_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    CheckFailed(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 usage, 3 resource, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::CheckFailed(_) => 4,
            CliError::Core(e) => match e {
                Error::Resource(_) | Error::Embedding(_) | Error::Routing(_) => 3,
                Error::Numerical(_)
                | Error::Synthesis(_)
                | Error::Normalization(_)
                | Error::IllPosedCorrection { .. }
                | Error::Fit(_) => 4,
                Error::Io(_)
                | Error::Json(_)
                | Error::InvalidSize(_)
                | Error::Dimension { .. }
                | Error::FamilyMismatch(_)
                | Error::Structural(_)
                | Error::Domain(_)
                | Error::Precondition(_)
                | Error::Invalid(_) => 2,
            },
        }
    }
}
