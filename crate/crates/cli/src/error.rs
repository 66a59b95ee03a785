use degenwave_core::conjecture::ConjectureError;
use degenwave_core::model::DomainError;
use degenwave_core::pde::PdeError;
use degenwave_core::profile::ProfileError;
use degenwave_core::shooting::ShootError;
use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cannot write {}: {reason}", path.display())]
    Io {
        path: PathBuf,
        reason: String,
        /// Files completed before the failure.
        written: Vec<String>,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Numerical(_) | CliError::Io { .. } => EXIT_NUMERICAL,
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Domain(e.0)
    }
}

impl From<ShootError> for CliError {
    fn from(e: ShootError) -> Self {
        match e {
            ShootError::Domain(d) => d.into(),
            ShootError::BelowMinimalSpeed { .. } => CliError::Domain(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PdeError> for CliError {
    fn from(e: PdeError) -> Self {
        match e {
            PdeError::Domain(d) => d.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ConjectureError> for CliError {
    fn from(e: ConjectureError) -> Self {
        match e {
            ConjectureError::Domain(d) => d.into(),
            ConjectureError::ComplexRoots { .. } => CliError::Domain(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
