use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("timestamps not strictly increasing at line {line}")]
    NonMonotone { line: usize },

    #[error("month {month} has {count} usable surges, need at least {required}")]
    SparseMonth {
        month: u32,
        count: usize,
        required: usize,
    },

    #[error(
        "insufficient tidal span: {requested} complete years requested, {available} available"
    )]
    InsufficientSpan { requested: usize, available: usize },

    #[error("too few observations: {0}")]
    TooFewObservations(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("optimizer did not converge after {restarts} restarts (best objective {best_value}, gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        restarts: usize,
        best_point: Vec<f64>,
        best_value: f64,
        gradient_norm: f64,
    },

    #[error("complete separation in exceedance indicators: {0}")]
    Separation(String),

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("no exceedances of level {level}")]
    NoExceedances { level: f64 },

    #[error("return level not attainable: {0}")]
    Unattainable(String),

    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapFailures { failed: usize, total: usize },

    #[error("data hash mismatch: model was fitted to {expected}, records hash to {actual}")]
    HashMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
