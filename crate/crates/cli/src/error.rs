use std::path::PathBuf;

use thiserror::Error;
use vaulteq::tokenomics::TokenomicsError;
use vaulteq::ModelError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    /// Every violated invariant as `(field path, reason)`.
    #[error("invalid configuration: {}", list(.0))]
    Invalid(Vec<(String, String)>),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

fn list(v: &[(String, String)]) -> String {
    v.iter()
        .map(|(f, r)| format!("{f}: {r}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl CliError {
    /// 0 success, 1 IO, 2 parse or validation, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { .. } | CliError::Invalid(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid(vec![(field.into(), reason.into())])
    }

    /// Model errors raised while running, with domain fields placed under `section`.
    pub(crate) fn model(section: &str, e: ModelError) -> Self {
        match e {
            ModelError::Domain { field, reason } => {
                CliError::invalid(format!("{section}.{field}"), reason)
            }
            other => CliError::Numerical(other.to_string()),
        }
    }

    pub(crate) fn tokenomics(e: TokenomicsError) -> Self {
        match e {
            TokenomicsError::Domain { field, reason } => {
                CliError::invalid(format!("scenario.{field}"), reason)
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
