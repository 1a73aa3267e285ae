use std::path::PathBuf;

/// Errors surfaced by every stage of the light/heat pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or non-physical input (geometry, reflectance, pixel ranges...).
    #[error("invalid input: {0}")]
    Input(String),

    /// Invalid solver or conversion configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Requested time step exceeds the explicit-scheme bound.
    #[error("time step {dt:.6} s exceeds the stability bound {bound:.6} s")]
    Stability { dt: f64, bound: f64 },

    /// A solver step produced a non-finite or non-positive temperature.
    #[error("numeric failure at step {step}: {detail}")]
    Numeric { step: usize, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    /// One value of a parameter sweep failed.
    #[error("sweep value {value}: {source}")]
    Sweep {
        value: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}

impl Error {
    /// The underlying error, looking through sweep wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sweep { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
