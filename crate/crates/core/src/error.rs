use std::path::PathBuf;

use thiserror::Error;

use crate::weights::Rejection;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible exponents: {0}")]
    Inadmissible(#[from] Rejection),

    #[error("quadrature diverges on {region}: successive increments ratio {ratio:.3}")]
    Divergent { region: String, ratio: f64 },

    #[error("height bracket not found in [{lo:e}, {hi:e}]")]
    HeightOutOfRange { lo: f64, hi: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("newton failed at step {step} after {iterations} iterations (residual {residual:e})")]
    NewtonFailure {
        step: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("positivity lost at step {step}, node {node}")]
    PositivityLoss { step: usize, node: usize },

    #[error("shooting bracket failure: {0}")]
    Shooting(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o on {path}: {source}")]
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

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
