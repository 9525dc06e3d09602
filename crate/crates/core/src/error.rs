use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The stacked stage system (or the open-loop `Lambda` matrix) is singular
    /// or too badly conditioned to produce a unique equilibrium.
    #[error("singular linear system at stage {stage} (condition estimate {condition:.3e})")]
    SingularSystem { stage: usize, condition: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A domain callback could not be evaluated (e.g. speed at or below the
    /// chart floor, or the curvilinear chart is singular).
    #[error("evaluation failure: {0}")]
    Evaluation(String),

    /// A planning step produced no plan; holds the solver's message.
    #[error("planning failed: {0}")]
    Planning(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error at {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
