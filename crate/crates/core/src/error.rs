use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown raw class {0:?}")]
    UnknownRawClass(String),

    #[error("unknown region {0:?}")]
    UnknownRegion(String),

    #[error("unknown season {0:?}")]
    UnknownSeason(String),

    #[error("unknown grouping {0:?} (expected continent or season)")]
    UnknownGrouping(String),

    #[error("class index {0} out of range [0, 8)")]
    ClassOutOfRange(u8),

    #[error("manifest not found: {}", .0.display())]
    ManifestNotFound(PathBuf),

    #[error("malformed manifest row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("duplicate patch_id {0:?}")]
    DuplicatePatchId(String),

    #[error("scene {scene:?} has inconsistent {field}: {first:?} vs {second:?}")]
    InconsistentScene {
        scene: String,
        field: &'static str,
        first: String,
        second: String,
    },

    #[error("patch {0:?} has no image/label paths (metadata-only manifest)")]
    MetadataOnly(String),

    #[error("size mismatch in {}: expected {expected} bytes, found {actual}", .path.display())]
    SizeMismatch { path: PathBuf, expected: u64, actual: u64 },

    #[error("header mismatch for patch {patch}: {field} is {header:?} in header but {manifest:?} in manifest")]
    HeaderMismatch {
        patch: String,
        field: &'static str,
        header: String,
        manifest: String,
    },

    #[error("invalid patch header {}: {reason}", .path.display())]
    InvalidHeader { path: PathBuf, reason: String },

    #[error("label value {value} at pixel {pixel} of patch {patch:?} is not a class index")]
    LabelOutOfRange { patch: String, pixel: usize, value: u8 },

    #[error("non-finite reflectance at index {index} of patch {patch:?}")]
    NonFiniteValue { patch: String, index: usize },

    #[error("shape mismatch: expected {expected}, found {actual}")]
    ShapeMismatch { expected: String, actual: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate samples: all {n} values equal {value}")]
    DegenerateSamples { n: usize, value: f64 },

    #[error("grid is not strictly ascending at index {0}")]
    NonAscendingGrid(usize),

    #[error("need at least {k} features for K = {k}, got {n}")]
    TooFewFeatures { n: usize, k: usize },

    #[error("patch {0:?} has no group label")]
    MissingGroup(String),

    #[error("histograms disagree on cluster count: {0} vs {1}")]
    ClusterCountMismatch(usize, usize),

    #[error("zero total variance across groups")]
    ZeroVariance,

    #[error("group {group:?} has {n} scene(s); at least 2 are required")]
    TooFewScenes { group: String, n: usize },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
