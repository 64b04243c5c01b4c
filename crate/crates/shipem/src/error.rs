use std::io;
use std::path::PathBuf;

use shipem_core::{ConfigError, EmError, SimError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Input { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("malformed document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("override `{key}`: {reason}")]
    Override { key: String, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Em(#[from] EmError),
    #[error("trace: {0}")]
    Csv(#[from] csv::Error),
    #[error("trace: {0}")]
    Trace(String),
}

impl Error {
    /// 1 for anything wrong with the inputs (including dispatch files), 2
    /// for faults while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input { .. }
            | Error::Parse(_)
            | Error::Config(_)
            | Error::Override { .. }
            | Error::Usage(_)
            | Error::Em(_)
            | Error::Trace(_)
            | Error::Sim(SimError::Config(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn input(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Input { path, source }
    }

    pub(crate) fn output(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Output { path, source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
