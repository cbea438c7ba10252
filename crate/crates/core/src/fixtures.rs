//! Built-in datasets: the SEN12MS scene/patch inventory as a metadata-only
//! manifest, and a synthetic region-shift dataset with real pixels.

use std::path::Path;

use rand::{Rng as _, RngCore as _};

use crate::bands::BAND_COUNT;
use crate::error::{Error, Result};
use crate::groups::{Region, Season};
use crate::manifest::{write_manifest, Manifest, ManifestEntry};
use crate::patch::{ClassGrid, Patch, PATCH_PIXELS, PATCH_SIZE};
use crate::patch_io::{write_patch, Dtype, PatchSource};
use crate::seed::{derive_seed, rng};

/// One row per SEN12MS scene: `scene_id,region,season,patches`.
pub const SEN12MS_SCENES_CSV: &str = include_str!("../fixtures/sen12ms_scenes.csv");

/// Expands the packaged scene inventory into a metadata-only manifest with
/// patch ids `<scene>_p<nnnn>`.
pub fn sen12ms_metadata_manifest() -> Result<Manifest> {
    let mut reader = csv::Reader::from_reader(SEN12MS_SCENES_CSV.as_bytes());
    let mut entries = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let malformed = |reason: String| Error::MalformedRow {
            line: i as u64 + 2,
            reason,
        };
        let scene = &row[0];
        let region: Region = row[1].parse()?;
        let season: Season = row[2].parse()?;
        let patches: usize = row[3].parse().map_err(|e| malformed(format!("patch count: {e}")))?;
        entries.extend(
            (0..patches).map(|p| ManifestEntry::metadata_only(format!("{scene}_p{p:04}"), scene, region, season)),
        );
    }
    Manifest::new(".", entries)
}

const HIGH: (u32, u32) = (4500, 5500);
const LOW: (u32, u32) = (200, 600);
const BACKGROUND: (u32, u32) = (2700, 3300);

/// Two-class dataset whose class signature lives on different bands in each
/// region. Region `r` (by position in `regions`) carries its signal on bands
/// `2r` and `2r + 1`: class 0 is bright on the first and dark on the second,
/// class 1 the reverse. Every other band is background noise. Each patch
/// splits its rows between the two classes at a random proportion in
/// `[0.2, 0.8]`. Seasons cycle over scenes.
#[derive(Debug, Clone)]
pub struct SyntheticShift {
    pub regions: Vec<Region>,
    pub scenes_per_region: usize,
    pub patches_per_scene: usize,
    pub seed: u64,
}

impl SyntheticShift {
    pub fn new(regions: Vec<Region>, scenes_per_region: usize, patches_per_scene: usize, seed: u64) -> Result<Self> {
        if regions.is_empty() || regions.len() > BAND_COUNT / 2 {
            return Err(Error::InvalidParameter(format!(
                "synthetic shift supports 1 to {} regions, got {}",
                BAND_COUNT / 2,
                regions.len()
            )));
        }
        if scenes_per_region == 0 || patches_per_scene == 0 {
            return Err(Error::InvalidParameter(
                "scene and patch counts must be positive".into(),
            ));
        }
        Ok(SyntheticShift {
            regions,
            scenes_per_region,
            patches_per_scene,
            seed,
        })
    }

    fn scene_id(region: Region, s: usize) -> String {
        format!("{}_s{s:02}", region.slug())
    }

    pub fn manifest(&self) -> Manifest {
        let mut entries = Vec::new();
        for &region in &self.regions {
            for s in 0..self.scenes_per_region {
                let scene = Self::scene_id(region, s);
                let season = Season::ALL[s % Season::ALL.len()];
                for p in 0..self.patches_per_scene {
                    entries.push(ManifestEntry::metadata_only(
                        format!("{scene}_p{p:04}"),
                        scene.clone(),
                        region,
                        season,
                    ));
                }
            }
        }
        Manifest::new(".", entries).expect("generated identifiers are unique")
    }

    /// Deterministic in `(seed, patch_id)`; independent of generation order.
    pub fn generate(&self, entry: &ManifestEntry) -> Result<Patch> {
        let r = self
            .regions
            .iter()
            .position(|&x| x == entry.region)
            .ok_or_else(|| Error::InvalidParameter(format!("region {} is not in the fixture", entry.region)))?;
        let mut rng = rng(derive_seed(self.seed, &entry.patch_id));
        let split_row = (rng.random_range(0.2..=0.8) * PATCH_SIZE as f64).round() as usize;
        let labels: Vec<u8> = (0..PATCH_PIXELS)
            .map(|i| u8::from(i / PATCH_SIZE >= split_row))
            .collect();
        let ranges: [[(u32, u32); 2]; BAND_COUNT] = std::array::from_fn(|b| {
            if b == 2 * r {
                [HIGH, LOW]
            } else if b == 2 * r + 1 {
                [LOW, HIGH]
            } else {
                [BACKGROUND, BACKGROUND]
            }
        });
        let mut image = vec![0.0f32; BAND_COUNT * PATCH_PIXELS];
        for (band, range) in image.chunks_exact_mut(PATCH_PIXELS).zip(&ranges) {
            // four 16-bit uniforms per draw
            for (values, classes) in band.chunks_exact_mut(4).zip(labels.chunks_exact(4)) {
                let word = rng.next_u64();
                for (j, (value, &class)) in values.iter_mut().zip(classes).enumerate() {
                    let (lo, hi) = range[class as usize];
                    let unit = u32::from((word >> (16 * j)) as u16);
                    *value = (lo + (((hi - lo) * unit) >> 16)) as f32;
                }
            }
        }
        Patch::new(
            entry.patch_id.clone(),
            entry.scene_id.clone(),
            entry.region,
            entry.season,
            image,
            ClassGrid::new(PATCH_SIZE, PATCH_SIZE, labels)?,
        )
    }

    /// Writes every patch plus `manifest.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path, dtype: Dtype) -> Result<Manifest> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("create {}", dir.display()), e))?;
        let metadata = self.manifest();
        let mut entries = Vec::with_capacity(metadata.len());
        for entry in metadata.entries() {
            let patch = self.generate(entry)?;
            entries.push(write_patch(dir, &entry.patch_id, &patch, dtype)?);
        }
        let manifest = Manifest::new(dir, entries)?;
        write_manifest(&dir.join("manifest.csv"), &manifest)?;
        Ok(manifest)
    }
}

impl PatchSource for SyntheticShift {
    fn load(&self, entry: &ManifestEntry) -> Result<Patch> {
        self.generate(entry)
    }
}
