use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("unsupported system for {method}: {reason}")]
    UnsupportedSystem { method: &'static str, reason: String },

    #[error("action derivative {zdot} inconsistent with Lagrangian value {lagrangian}")]
    InconsistentAction { zdot: f64, lagrangian: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular update: denominator {denominator:e} too close to zero")]
    SingularUpdate { denominator: f64 },

    #[error("singular Jacobian in Newton solve")]
    SingularJacobian,

    #[error("step size {h} too large: 1 + h*alpha/2 = {denominator}")]
    StepTooLarge { h: f64, denominator: f64 },

    #[error("resonant forcing (alpha = 0, omega = 1) has no bounded solution")]
    Resonance,

    #[error("trajectories do not share an x-history (max gap {gap:e})")]
    MismatchedTrajectories { gap: f64 },

    #[error("error metric undefined: 10 + x = {denominator}")]
    DomainError { denominator: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attaches the name of the benchmark cell that failed.
    pub fn in_cell(self, cell: impl Into<String>) -> Self {
        Error::Cell {
            cell: cell.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::SingularUpdate { .. }
            | Error::SingularJacobian
            | Error::StepTooLarge { .. }
            | Error::MismatchedTrajectories { .. }
            | Error::DomainError { .. } => true,
            Error::StepFailed { source, .. } | Error::Cell { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub(crate) fn ensure_all_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
