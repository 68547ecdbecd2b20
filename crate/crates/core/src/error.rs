use std::path::PathBuf;

use crate::field::Field;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time step {tau:e} violates the stability bound {bound:e} ({rule})")]
    Cfl { tau: f64, bound: f64, rule: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no convergence after {iterations} iterations (last update {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<Field>,
    },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("no sign change on bracket; samples {samples:?}")]
    NoSignChange { samples: Vec<(f64, f64)> },

    #[error("toppling did not settle after {sweeps} sweeps (max excess {excess:e})")]
    ToppleCap { sweeps: usize, excess: f64 },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
