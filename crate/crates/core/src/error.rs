use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    /// A parameter or config key is missing, unknown, or out of range.
    #[error("parameter `{key}`: {reason}")]
    Param { key: String, reason: String },

    #[error("weather row {row}, column {column}: {reason}")]
    WeatherRow {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("weather series: {0}")]
    Weather(String),

    #[error("weather series does not cover the season: {0}")]
    WeatherCoverage(String),

    #[error("crop has already matured; the state can no longer be stepped")]
    AlreadyMatured,

    #[error("crop has not matured; yield is only defined at maturity")]
    NotMatured,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("episode is done; call reset before stepping again")]
    EpisodeDone,

    #[error("environment has not been reset")]
    NotReset,

    #[error("reference yield is zero; normalized return is undefined")]
    ZeroReferenceYield,

    #[error("invalid policy spec `{0}` (expected zero, constant:<mm> or checkpoint:<path>)")]
    PolicySpec(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("PPO update aborted: {0}")]
    Diverged(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Param {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
