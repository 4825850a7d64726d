use thiserror::Error;

use crate::params::Electrode;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("invalid curve: {0}")]
    Curve(String),
    #[error("malformed parameter JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum SpmtError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("temperature must be positive, got {0} K")]
    Domain(f64),
    #[error("exchange current density must be positive, got {0} A/m2")]
    DegenerateKinetics(f64),
    #[error(
        "{electrode} concentration left [0, c_s_max] at node {node:?}: {value} mol/m3 (c_s_max {c_max})"
    )]
    Saturation {
        electrode: Electrode,
        /// `None` when the surface value handed to the kinetics was out of range.
        node: Option<usize>,
        value: f64,
        c_max: f64,
    },
    #[error("{0}")]
    Input(String),
}

#[derive(Debug, Error)]
pub enum FnnError {
    #[error("input has {got} features, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged {
        epoch: usize,
        loss: f64,
        history: Vec<crate::fnn::EpochRecord>,
    },
    #[error("invalid network: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("simulation of {label} at soc0 = {soc0} failed at t = {t} s: {source}")]
    Simulation {
        label: String,
        soc0: f64,
        t: f64,
        #[source]
        source: SpmtError,
    },
    #[error("dataset is missing column `{0}`")]
    MissingColumn(String),
    #[error("{0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("series are empty")]
    Empty,
    #[error("every evaluation row failed")]
    AllRowsFailed,
}

#[derive(Debug, Error)]
pub enum HybridError {
    #[error(transparent)]
    Fnn(#[from] FnnError),
    #[error(transparent)]
    Spmt(#[from] SpmtError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Invalid(String),
}

/// Error surface of the command layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Spmt(#[from] SpmtError),
    #[error(transparent)]
    Fnn(#[from] FnnError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Hybrid(#[from] HybridError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Usage(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for usage and input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Spmt(_) | Error::Fnn(_) | Error::Eval(_) => 2,
            Error::Hybrid(HybridError::Fnn(_) | HybridError::Spmt(_)) => 2,
            Error::Dataset(DatasetError::Simulation { .. }) => 2,
            _ => 1,
        }
    }
}
