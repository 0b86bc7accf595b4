use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config file not found: {}", path.display())]
    ConfigNotFound { path: PathBuf },

    #[error("malformed config {}: {message}", path.display())]
    ConfigSyntax { path: PathBuf, message: String },

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in `{term}`")]
    NonFinite { term: String },

    #[error("divergence at step {step} (t = {time:.4} s): `{quantity}` reached {value:e}")]
    Divergence {
        quantity: String,
        step: usize,
        time: f64,
        value: f64,
    },

    #[error("invalid drive cycle: {0}")]
    Cycle(String),

    #[error("riccati iteration did not converge after {iterations} iterations (residual {residual:e})")]
    RiccatiNonConvergence { iterations: usize, residual: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidValue {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(term: impl Into<String>) -> Self {
        Error::NonFinite { term: term.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Returns `Err(NonFinite)` naming `term` unless every value is finite.
pub(crate) fn ensure_finite<'a>(term: &str, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(term))
    }
}
