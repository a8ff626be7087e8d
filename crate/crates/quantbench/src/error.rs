//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    /// A float that cannot be represented in the target precision.
    #[error("cast to {target} out of range at row {row}, col {col}: {value}")]
    CastRange {
        target: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("stratification error: {0}")]
    Stratification(String),

    #[error("clock error: {0}")]
    Clock(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("dataset error in {path}: {message}")]
    Dataset { path: PathBuf, message: String },

    /// A grid cell failure, annotated with the (technique, precision) pair.
    #[error("cell ({technique}, {precision}) failed: {source}")]
    Cell {
        technique: String,
        precision: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the grid cell it occurred in.
    pub fn in_cell(self, technique: impl Into<String>, precision: impl Into<String>) -> Error {
        Error::Cell {
            technique: technique.into(),
            precision: precision.into(),
            source: Box::new(self),
        }
    }
}
