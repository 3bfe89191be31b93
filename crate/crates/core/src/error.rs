use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the planner and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{format} parse error at {location}: {message}")]
    Parse {
        format: &'static str,
        location: String,
        message: String,
    },

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid hand model: {0}")]
    Hand(String),

    #[error("degenerate contact {0}: zero normal")]
    DegenerateContact(usize),

    #[error("infeasible grasp: {0}")]
    InfeasibleGrasp(String),

    #[error("seeding failed: {0}")]
    Seeding(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(format: &'static str, location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            format,
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
