use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("eigenvalue search for order {order} found {found} of {requested} roots below k = {ceiling}")]
    EigenSearch {
        order: usize,
        requested: usize,
        found: usize,
        ceiling: f64,
    },

    #[error("grid radius {grid} does not match basis radius {basis}")]
    RadiusMismatch { grid: f64, basis: f64 },

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("model variant {variant} is incompatible with {what}")]
    Incompatible { variant: &'static str, what: String },

    #[error("time step {dt} exceeds the explicit stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("numeric blow-up at step {step} (t = {t}): coefficient magnitude {magnitude:e}")]
    BlowUp { step: usize, t: f64, magnitude: f64 },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
