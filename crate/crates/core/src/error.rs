use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A CSV row could not be interpreted. `row` is the 1-based data row (header excluded).
    #[error("{message}, row {row}")]
    Parse { row: usize, message: String },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("point (lon {lon}, lat {lat}) outside grid bounding box")]
    OutOfGrid { lon: f64, lat: f64 },

    #[error("turbines outside wind grid: {}", .0.join(", "))]
    TurbinesOutsideGrid(Vec<String>),

    #[error("time index {index} out of range (n_time = {n_time})")]
    TimeOutOfRange { index: usize, n_time: usize },

    #[error("period {0} not covered by wind grid")]
    PeriodNotCovered(String),

    #[error("no usable turbines")]
    NoUsableTurbines,

    #[error("field never observed: {0}")]
    FieldNeverObserved(&'static str),

    #[error("series not aligned: {0}")]
    Misaligned(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no generation data")]
    NoGenerationData,

    #[error("no reference data")]
    NoReferenceData,

    #[error("instance too large for brute force: {evaluations} point evaluations (limit {limit})")]
    TooLarge { evaluations: u64, limit: u64 },

    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 configuration, 3 data, 4 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::NotFound(_) => 2,
            Error::Invariant(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(row: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            row,
            message: msg.into(),
        }
    }
}
