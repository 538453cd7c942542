use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type. Variants carry enough structure to be matched on;
/// messages are written for CLI display.
#[derive(Debug, Error)]
pub enum Error {
    #[error("width {width} is odd, cannot split side-by-side at the midline")]
    OddWidth { width: usize },

    #[error("dimensions must be nonzero, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },

    #[error("dimension mismatch: {expected_width}x{expected_height} vs {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("tensor shape mismatch: {expected:?} vs {got:?} (channels, height, width)")]
    ShapeMismatch {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },

    #[error("input is empty")]
    EmptyInput,

    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate input: {reason}")]
    DegenerateInput { reason: String },

    #[error("image {width}x{height} is smaller than the {min}x{min} window")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },

    #[error("every pixel is occluded, nothing to fill from")]
    AllOccluded,

    #[error("step {t} is outside the schedule range 1..={max}")]
    StepOutOfRange { t: usize, max: usize },

    #[error("invalid schedule range: {reason}")]
    InvalidRange { reason: String },

    #[error("steps must strictly decrease, got t={t}, t_prev={t_prev}")]
    NonMonotoneSteps { t: usize, t_prev: usize },

    #[error("no frames found in {path}")]
    EmptyDirectory { path: PathBuf },

    #[error("category {category} has {available} records, {requested} requested for test")]
    InsufficientRecords {
        category: String,
        available: usize,
        requested: usize,
    },

    #[error("missing candidate images for {} pair(s): {}", pair_ids.len(), pair_ids.join(", "))]
    MissingCandidate { pair_ids: Vec<String> },

    #[error("pair id {pair_id} is not present in the report")]
    UnknownPairId { pair_id: String },

    #[error("pair {pair_id} has {count} annotator(s), at least 2 are required")]
    TooFewAnnotators { pair_id: String, count: usize },

    #[error("annotation score {score} for pair {pair_id} is outside 1..=10")]
    ScoreOutOfRange { pair_id: String, score: f64 },

    #[error("manifest line {line}: {reason}")]
    ManifestSchema { line: usize, reason: String },

    #[error("io error at {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error at {path}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json error at {path}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error at {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn codec(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Codec {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        Error::InvalidParams {
            reason: reason.into(),
        }
    }
}
