use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    Validity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// ᾱ_t is 1 (or the per-step α is 1), so the noise direction is undefined.
    #[error("degenerate timestep t={t}: alpha_bar={alpha_bar}")]
    DegenerateTimestep { t: usize, alpha_bar: f64 },

    #[error("schedule error: {0}")]
    Schedule(String),

    /// Raised when an internal invariant fails; indicates a bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed field file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
