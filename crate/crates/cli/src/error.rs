use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("numerical error in {context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: asymlab::Error,
    },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("manifest check failed: {0}")]
    Manifest(String),
}

impl CliError {
    pub fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema { .. } => 2,
            Self::Numerical { .. } | Self::Manifest(_) => 3,
            Self::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a context label to core errors.
pub trait NumericalContext<T> {
    fn context(self, label: impl Into<String>) -> CliResult<T>;
}

impl<T> NumericalContext<T> for asymlab::Result<T> {
    fn context(self, label: impl Into<String>) -> CliResult<T> {
        self.map_err(|source| CliError::Numerical {
            context: label.into(),
            source,
        })
    }
}
