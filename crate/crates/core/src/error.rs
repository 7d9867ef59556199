use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} is out of range for a chain of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("chain of {sites} sites exceeds the configured ceiling of {max} sites")]
    TooManySites { sites: usize, max: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("{what} is not Hermitian (max |A - A^dag| = {deviation:.3e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum too small: {0}")]
    SpectrumTooSmall(String),

    #[error("reflection symmetry violated: max |[H, R]| = {0:.3e}")]
    SymmetryBroken(f64),

    #[error("imaginary residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ImaginaryResidual { residual: f64, tolerance: f64 },

    #[error("decomposition identity violated: max deviation {deviation:.3e} ({what})")]
    DecompositionMismatch { what: &'static str, deviation: f64 },

    #[error("window [{start}, {end}] exceeds trace support [{lo}, {hi}]")]
    WindowOutOfRange { start: f64, end: f64, lo: f64, hi: f64 },

    #[error("every point of the sweep is degenerate")]
    AllDegenerate,

    #[error("eigenvectors are not normalized (max deviation {0:.3e})")]
    NotNormalized(f64),

    #[error("spectrum cache {path}: {msg}")]
    Cache { path: PathBuf, msg: String },

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by the run configuration rather than the computation.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
