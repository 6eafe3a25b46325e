use std::path::Path;

use kdyn_core::api::FieldError;
use kdyn_core::{CalibrationError, IntegratorError, ModelError, ScenarioError, SeriesError};
use kdyn_ingest::IngestError;
use kdyn_service::ServiceError;

/// Command failure, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or a domain precondition: exit 1.
    #[error("{0}")]
    Invalid(String),
    /// File system or network: exit 2.
    #[error("{0}")]
    Io(String),
    /// Integration or optimization failure: exit 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<IntegratorError> for CliError {
    fn from(e: IntegratorError) -> Self {
        match e {
            IntegratorError::InvalidConfig(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::AllRestartsFailed { .. } | CalibrationError::ArchiveNotPositive(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Transport { .. }
            | IngestError::Http { .. }
            | IngestError::NotCached { .. }
            | IngestError::CacheCorrupt { .. }
            | IngestError::Io { .. }
            | IngestError::Json { .. } => CliError::Io(e.to_string()),
            IngestError::EmptyWindow { .. }
            | IngestError::Schema { .. }
            | IngestError::GapsInJoin { .. }
            | IngestError::Series(_) => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::PresetDir { .. } | ServiceError::Bind { .. } | ServiceError::Serve(_) => {
                CliError::Io(e.to_string())
            }
            ServiceError::Preset(inner) => inner.into(),
            ServiceError::DuplicatePreset { .. } | ServiceError::BadOrigin(_) => CliError::Invalid(e.to_string()),
        }
    }
}
