//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::perturb::InversionCertificate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid norm descriptor: {0}")]
    InvalidNorm(String),

    #[error("non-finite coordinate at index {index}")]
    NonFinite { index: usize },

    /// A numeric parameter lies outside the range its formula accepts.
    #[error("domain error for {param}: {reason}")]
    Domain { param: &'static str, reason: String },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("inconsistent pair #{index}: |dS| = |dT| = 0 but |dT - dS| = {residual:e}")]
    InconsistentPair { index: usize, residual: f64 },

    #[error("not verifiable: {0}")]
    NotVerifiable(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence {
        residual: f64,
        iterations: usize,
        best: Box<InversionCertificate>,
    },

    #[error("degenerate norm: coefficient vector e_{witness} has zero norm")]
    DegenerateNorm { witness: usize },

    #[error("singular matrix")]
    Singular,

    #[error("overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("unknown reference `{0}`")]
    UnknownReference(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }
}
