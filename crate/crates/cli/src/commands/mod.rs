mod cluster;
mod evaluate;
mod fixture;
mod shift;
mod stats;
mod summarize;

use anyhow::Result;
use geoshift::{FileSource, Manifest, ManifestEntry, Patch, PatchSource};
use rayon::prelude::*;

pub use cluster::run as cluster;
pub use evaluate::run as evaluate;
pub use fixture::run as fixture;
pub use shift::run as shift;
pub use stats::run as stats;
pub use summarize::run as summarize;

/// Patches loaded per parallel batch; bounds memory on large manifests.
const LOAD_BATCH: usize = 64;

/// Loads each manifest patch and maps it, in manifest order.
fn map_patches<T, F>(manifest: &Manifest, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ManifestEntry, &Patch) -> geoshift::Result<T> + Sync,
{
    let source = FileSource::for_manifest(manifest);
    let mut out = Vec::with_capacity(manifest.len());
    for batch in manifest.entries().chunks(LOAD_BATCH) {
        let mapped = batch
            .par_iter()
            .map(|e| f(e, &source.load(e)?))
            .collect::<geoshift::Result<Vec<T>>>()?;
        out.extend(mapped);
    }
    Ok(out)
}
