use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (must be between 2 and 16)")]
    UnsupportedDimension(usize),

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("empty point list")]
    EmptyPointList,

    #[error("point is not in the affine hull of the generators (residual {residual:e})")]
    NotInHull { residual: f64 },

    #[error("point is not in the prism: {0}")]
    NotInPrism(String),

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("point is not outside the target set")]
    NotOutsideTarget,

    #[error("degenerate geometry: {0}")]
    GeometryDegenerate(String),

    #[error("category {category} out of range for {d} categories")]
    CategoryOutOfRange { category: usize, d: usize },

    #[error("no observations yet")]
    NoObservations,

    #[error("fixed outcome sequence exhausted after {0} steps")]
    SequenceExhausted(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to parse configuration: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
