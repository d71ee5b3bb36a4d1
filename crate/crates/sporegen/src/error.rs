use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("invalid config: {field} {reason}")]
    Invalid { field: String, reason: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: &str, reason: &str) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            reason: reason.to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O failure at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("PNG encoding failed for {path}: {message}")]
    Encode { path: PathBuf, message: String },
    #[error("frame {frame}: segment budget of {budget} exceeded at entity {entity}")]
    SegmentBudget {
        frame: usize,
        entity: u32,
        budget: usize,
    },
    #[error("frame {frame}: {source}")]
    Simulation {
        frame: usize,
        source: sporegen_core::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn simulation(frame: usize, source: sporegen_core::Error) -> Self {
        match source {
            sporegen_core::Error::SegmentBudgetExceeded { owner_id, budget } => {
                DatasetError::SegmentBudget {
                    frame,
                    entity: owner_id,
                    budget,
                }
            }
            source => DatasetError::Simulation { frame, source },
        }
    }
}

/// Failures that stop `verify_dataset` from producing a report at all.
#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
}
