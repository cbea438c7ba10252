//! Geographic and seasonal distribution shift in multispectral land-use data.
//!
//! The crate covers the path from a patch manifest to the analyses that
//! characterize shift between regions or seasons:
//!
//! - [`manifest`] and [`patch_io`] read the dataset inventory and patch files,
//! - [`stats`] summarizes per-band reflectance and estimates band densities,
//! - [`kmeans`] clusters patches into landscape types,
//! - [`shift`] and [`pca`] compare groups through their cluster mixtures,
//! - [`eval`] measures cross-group accuracy of a baseline classifier.
//!
//! All randomness is seeded, and parallel reductions combine partial results
//! in a fixed order so outputs do not depend on the thread count.

pub mod bands;
pub mod error;
pub mod eval;
pub mod export;
pub mod fixtures;
pub mod groups;
pub mod kmeans;
pub mod labels;
pub mod manifest;
pub mod patch;
pub mod patch_io;
pub mod pca;
pub mod seed;
pub mod shift;
pub mod stats;

pub use bands::{Band, BAND_COUNT};
pub use error::{Error, Result};
pub use groups::{Grouping, Region, Season};
pub use kmeans::{
    featurize, kmeans_assign, kmeans_fit, kmeans_fit_best_of, Assignment, ClusterModel, FeatureVector, KMeansConfig,
};
pub use labels::{consolidate_label, ConsolidatedClass, CLASS_COUNT};
pub use manifest::{load_manifest, summarize_manifest, DatasetSummary, Manifest, ManifestEntry};
pub use patch::{ClassGrid, Patch, PATCH_PIXELS, PATCH_SIZE};
pub use patch_io::{load_patch, write_patch, Dtype, FileSource, InMemorySource, PatchSource};
pub use pca::{pca_embed, PcaEmbedding};
pub use shift::{
    cluster_histogram, coverage_score, group_given_cluster, ClusterHistogram, Correction, ProbabilityTable,
};
pub use stats::{band_summary, kde, silverman_bandwidth, BandSummary, DensityCurve};
