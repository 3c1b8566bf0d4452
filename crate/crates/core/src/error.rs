use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument outside its admissible set.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    /// A function evaluated outside its domain (e.g. a density at w <= 0).
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: estimate {estimate:e}, error estimate {error:e} after {intervals} subintervals"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("infinite moment: {0}")]
    InfiniteMoment(String),

    /// The tilt passed to the thinning sampler increased between two points.
    #[error("tilt function is not monotone decreasing: h({later:e}) = {h_later:e} > h({earlier:e}) = {h_earlier:e}")]
    NonMonotoneTilt {
        earlier: f64,
        later: f64,
        h_earlier: f64,
        h_later: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by user-provided configuration rather than by a failure
    /// during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. } | Error::Config(_) | Error::Shape(_) | Error::Json(_)
        )
    }
}
