use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_STARVATION: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(whichway::Error),
    #[error("{0}")]
    Starvation(String),
    #[error("{0} verification check(s) failed")]
    VerifyFailed(usize),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Json { .. } => EXIT_USAGE,
            CliError::Model(_) => EXIT_DOMAIN,
            CliError::Starvation(_) => EXIT_STARVATION,
            CliError::VerifyFailed(_) => EXIT_VERIFY,
        }
    }
}

impl From<whichway::Error> for CliError {
    fn from(e: whichway::Error) -> Self {
        match e {
            whichway::Error::ShotStarvation { .. } => CliError::Starvation(e.to_string()),
            whichway::Error::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Model(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
