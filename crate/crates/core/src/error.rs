use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("bad CSV header: expected `{expected}`, found `{found}`")]
    BadHeader { expected: String, found: String },

    #[error("{ticker}: duplicate date {date}")]
    DuplicateDate { ticker: String, date: NaiveDate },

    #[error("line {line}: OHLC inconsistency: {reason}")]
    OhlcInconsistent { line: u64, reason: String },

    #[error("line {line}: non-positive price {value}")]
    NonPositivePrice { line: u64, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("duplicate ticker {0}")]
    DuplicateTicker(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("insufficient history: need {needed}, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("non-finite training loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("missing realized return for held ticker {ticker} on {date}")]
    MissingReturn { ticker: String, date: NaiveDate },

    #[error("bankruptcy: equity {equity} on {date}")]
    Bankruptcy { date: NaiveDate, equity: f64 },

    #[error("missing manifest in {0}")]
    MissingManifest(PathBuf),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a location such as `predictor: ticker SYN000, fold 3`.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage/config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::InvalidConfig(_) | Error::InvalidSpec(_) => 1,
            Error::NonFiniteLoss { .. } | Error::Bankruptcy { .. } => 3,
            _ => 2,
        }
    }
}
