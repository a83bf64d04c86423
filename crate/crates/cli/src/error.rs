use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid value for {flag}: {message}")]
    Usage { flag: &'static str, message: String },
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] bdt_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn usage(flag: &'static str, message: impl Into<String>) -> Self {
        CliError::Usage {
            flag,
            message: message.into(),
        }
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for usage errors, 3 for bad input data, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Data { .. } => 3,
            CliError::Core(e) => match e {
                bdt_core::Error::InvalidDataset(_)
                | bdt_core::Error::TooFewClasses
                | bdt_core::Error::ConstantDataset
                | bdt_core::Error::DimensionMismatch { .. } => 3,
                bdt_core::Error::InvalidConfig(_) | bdt_core::Error::InvalidProbabilities(_) => 2,
                _ => 1,
            },
            CliError::Io { .. } | CliError::Mismatch(_) => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
