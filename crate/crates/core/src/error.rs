use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the divlsh library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: vector has no positive mass")]
    DegenerateInput,

    #[error("negative mass at index {index}: {value}")]
    NegativeMass { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("not a probability vector: entries sum to {sum}")]
    NotNormalized { sum: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("P not << Q: P({index}) = {p} but Q({index}) = 0")]
    SupportViolation { index: usize, p: f64 },

    #[error("f-divergence needs the limit f'(inf) at index {index} but none was supplied")]
    MissingLimit { index: usize },

    #[error("unknown feature id {0:?}")]
    UnknownFeature(String),

    #[error("unsupported feature value {0:?}: column has zero mass")]
    UnsupportedFeature(String),

    #[error("identical feature ids {0:?}")]
    IdenticalFeatures(String),

    #[error("norm bound violated: M = {bound} < |eta|^2 = {norm_sq}")]
    NormBound { bound: f64, norm_sq: f64 },

    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),

    #[error("scheme {scheme} cannot index this dataset: {reason}")]
    SchemeMismatch { scheme: String, reason: String },

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("index file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
