use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the inference library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: masks were built over different grids")]
    GridMismatch,

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dataset needs at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("invalid bootstrap plan: {0}")]
    InvalidPlan(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("infeasible perturbation scale: {0}")]
    InfeasibleScale(String),

    #[error("invalid selection rule: {0}")]
    InvalidSelectionRule(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: no data rows")]
    NoData { path: PathBuf },

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

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch => "grid_mismatch",
            Error::EmptyDataset => "empty_dataset",
            Error::TooFewObservations { .. } => "too_few_observations",
            Error::InvalidPlan(_) => "invalid_plan",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Unsupported(_) => "unsupported",
            Error::InfeasibleScale(_) => "infeasible_scale",
            Error::InvalidSelectionRule(_) => "invalid_selection_rule",
            Error::Parse { .. } => "parse",
            Error::NoData { .. } => "no_data",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json { .. } => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
