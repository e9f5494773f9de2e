use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("degenerate batch: need at least 2 rows, got {rows}")]
    DegenerateBatch { rows: usize },
    #[error("invalid sketch: k={k} must satisfy 1 <= k <= c={c}")]
    InvalidSketch { k: usize, c: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("effective rank undefined: spectrum has no positive eigenvalue")]
    UndefinedRank,
    #[error("label {label} at row {row} out of range for {num_classes} classes")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        num_classes: usize,
    },
    #[error("layer index {index} out of range (valid hidden layers: 1..={max})")]
    LayerOutOfRange { index: usize, max: usize },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
