//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv parse error: {0}")]
    Csv(String),

    #[error("cell at row {row}, column {column} is not a finite number: {value:?}")]
    BadCell {
        /// 1-based data row (excluding the header).
        row: usize,
        column: String,
        value: String,
    },

    #[error("response column {0:?} not found in header")]
    MissingResponse(String),

    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular least-squares system: pivot {pivot:.3e} below tolerance {tolerance:.3e} at column {column}")]
    SingularSystem {
        column: usize,
        pivot: f64,
        tolerance: f64,
    },

    #[error("response is identically zero after centering; no penalization scale exists")]
    ZeroResponse,

    #[error("coordinate descent did not converge at grid index {lambda_index} after {sweeps} sweeps")]
    NonConvergence { lambda_index: usize, sweeps: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("retained bootstrap set is empty at alpha {alpha}")]
    EmptyRetained { alpha: f64 },

    #[error("unknown builtin example id {0} (valid: 1..=10)")]
    UnknownExample(usize),

    #[error("bootstrap replicate {replicate} failed after {attempts} attempts: {source}")]
    ReplicateFailed {
        replicate: usize,
        attempts: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("study replicate {replicate} failed: {source}")]
    StudyReplicateFailed {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
