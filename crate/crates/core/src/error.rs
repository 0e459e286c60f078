use std::path::PathBuf;

use thiserror::Error;

use crate::model::ObjectId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("object id {id} out of range for dataset of {n} objects")]
    IdOutOfRange { id: usize, n: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("non-finite coordinate in row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("record {record} is empty")]
    EmptyRecord { record: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("backend {backend} cannot serve metric {metric}")]
    IncompatibleBackend {
        backend: &'static str,
        metric: &'static str,
    },

    #[error("radius {radius} exceeds the provider's build epsilon {epsilon}")]
    RadiusExceedsEpsilon { radius: f64, epsilon: f64 },

    #[error("epsilon* {requested} exceeds the index's generating epsilon {epsilon} (MinPts = {min_pts})")]
    EpsilonOutOfRange {
        requested: f64,
        epsilon: f64,
        min_pts: u64,
    },

    #[error("MinPts* {requested} is below the index's generating MinPts {min_pts} (epsilon = {epsilon})")]
    MinPtsOutOfRange {
        requested: u64,
        epsilon: f64,
        min_pts: u64,
    },

    #[error("object {0} is not a core object")]
    NotCore(ObjectId),

    #[error("dataset fingerprint does not match the index")]
    FingerprintMismatch,

    #[error("labelings cover different object sets ({left} vs {right} objects)")]
    LabelingMismatch { left: usize, right: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),

    #[error("unsupported index format version {0}")]
    UnsupportedVersion(u32),

    #[error("index file is truncated")]
    Truncated,

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
