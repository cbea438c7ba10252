//! Portable patch files.
//!
//! An image is a raw little-endian tensor laid out band-major
//! (`band, row, col`), `10 * 256 * 256` scalars of either `u16` or `f32`.
//! Next to it sits a JSON sidecar with the same stem describing the tensor.
//! Labels are a separate raw file of `256 * 256` unsigned bytes, row-major.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bands::{band_names, BAND_COUNT, MAX_REFLECTANCE};
use crate::error::{Error, Result};
use crate::export::{to_json_bytes, write_atomic};
use crate::groups::{Region, Season};
use crate::labels::CLASS_COUNT;
use crate::manifest::{Manifest, ManifestEntry};
use crate::patch::{ClassGrid, Patch, PATCH_PIXELS, PATCH_SIZE};

pub const VALUE_SCALE_NOTE: &str = "surface reflectance scaled by 10000, clipped to [0, 10000]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U16,
    F32,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U16 => 2,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchFileHeader {
    pub patch_id: String,
    pub scene_id: String,
    pub region: Region,
    pub season: Season,
    pub bands: Vec<String>,
    pub height: usize,
    pub width: usize,
    pub dtype: Dtype,
    pub value_scale: String,
}

impl PatchFileHeader {
    pub fn for_patch(patch: &Patch, dtype: Dtype) -> Self {
        PatchFileHeader {
            patch_id: patch.patch_id.clone(),
            scene_id: patch.scene_id.clone(),
            region: patch.region,
            season: patch.season,
            bands: band_names().iter().map(|s| s.to_string()).collect(),
            height: PATCH_SIZE,
            width: PATCH_SIZE,
            dtype,
            value_scale: VALUE_SCALE_NOTE.to_string(),
        }
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let invalid = |reason: String| Error::InvalidHeader {
            path: path.to_path_buf(),
            reason,
        };
        if self.bands.iter().map(String::as_str).ne(band_names()) {
            return Err(invalid(format!(
                "bands {:?} differ from registry order {:?}",
                self.bands,
                band_names()
            )));
        }
        if self.height != PATCH_SIZE || self.width != PATCH_SIZE {
            return Err(invalid(format!(
                "dimensions {}x{}, expected {PATCH_SIZE}x{PATCH_SIZE}",
                self.height, self.width
            )));
        }
        Ok(())
    }

    fn check_against(&self, entry: &ManifestEntry) -> Result<()> {
        let mismatch = |field: &'static str, header: String, manifest: String| {
            Err(Error::HeaderMismatch {
                patch: entry.patch_id.clone(),
                field,
                header,
                manifest,
            })
        };
        if self.patch_id != entry.patch_id {
            return mismatch("patch_id", self.patch_id.clone(), entry.patch_id.clone());
        }
        if self.scene_id != entry.scene_id {
            return mismatch("scene_id", self.scene_id.clone(), entry.scene_id.clone());
        }
        if self.region != entry.region {
            return mismatch("region", self.region.to_string(), entry.region.to_string());
        }
        if self.season != entry.season {
            return mismatch("season", self.season.to_string(), entry.season.to_string());
        }
        Ok(())
    }
}

/// Sidecar path for an image file: same stem, `.json` extension.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    image_path.with_extension("json")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(format!("read {}", path.display()), e))
}

fn expect_len(path: &Path, bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: expected as u64,
            actual: bytes.len() as u64,
        });
    }
    Ok(())
}

fn clip(v: f32) -> f32 {
    v.clamp(0.0, MAX_REFLECTANCE)
}

/// Decodes an image payload, widening `u16` losslessly and clipping into the reflectance range.
pub fn decode_image(bytes: &[u8], dtype: Dtype, patch_id: &str) -> Result<Vec<f32>> {
    let values: Vec<f32> = match dtype {
        Dtype::U16 => bytes
            .chunks_exact(2)
            .map(|c| clip(f32::from(u16::from_le_bytes([c[0], c[1]]))))
            .collect(),
        Dtype::F32 => {
            let raw: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    patch: patch_id.to_string(),
                    index,
                });
            }
            raw.into_iter().map(clip).collect()
        }
    };
    Ok(values)
}

pub fn encode_image(image: &[f32], dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(image.len() * dtype.size());
    match dtype {
        Dtype::U16 => {
            for &v in image {
                out.extend_from_slice(&(v.round().clamp(0.0, u16::MAX as f32) as u16).to_le_bytes());
            }
        }
        Dtype::F32 => {
            for &v in image {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Loads and validates one patch; relative paths resolve against `root`.
pub fn load_patch(root: &Path, entry: &ManifestEntry) -> Result<Patch> {
    let (Some(image_rel), Some(label_rel)) = (&entry.image_path, &entry.label_path) else {
        return Err(Error::MetadataOnly(entry.patch_id.clone()));
    };
    let resolve = |p: &Path| {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            root.join(p)
        }
    };
    let image_path = resolve(image_rel);
    let label_path = resolve(label_rel);

    let header_path = sidecar_path(&image_path);
    let header: PatchFileHeader = serde_json::from_slice(&read(&header_path)?).map_err(|e| Error::InvalidHeader {
        path: header_path.clone(),
        reason: e.to_string(),
    })?;
    header.validate(&header_path)?;
    header.check_against(entry)?;

    let bytes = read(&image_path)?;
    expect_len(&image_path, &bytes, BAND_COUNT * PATCH_PIXELS * header.dtype.size())?;
    let image = decode_image(&bytes, header.dtype, &entry.patch_id)?;

    let label_bytes = read(&label_path)?;
    expect_len(&label_path, &label_bytes, PATCH_PIXELS)?;
    if let Some(pixel) = label_bytes.iter().position(|&v| v as usize >= CLASS_COUNT) {
        return Err(Error::LabelOutOfRange {
            patch: entry.patch_id.clone(),
            pixel,
            value: label_bytes[pixel],
        });
    }
    let labels = ClassGrid::new(PATCH_SIZE, PATCH_SIZE, label_bytes)?;
    Patch::new(
        entry.patch_id.clone(),
        entry.scene_id.clone(),
        entry.region,
        entry.season,
        image,
        labels,
    )
}

/// Writes `<stem>.bin`, `<stem>.json` and `<stem>_labels.bin` under `dir` and
/// returns a manifest entry whose paths are relative to `dir`.
pub fn write_patch(dir: &Path, stem: &str, patch: &Patch, dtype: Dtype) -> Result<ManifestEntry> {
    let image_rel = PathBuf::from(format!("{stem}.bin"));
    let label_rel = PathBuf::from(format!("{stem}_labels.bin"));
    let header = PatchFileHeader::for_patch(patch, dtype);
    write_atomic(&dir.join(&image_rel), &encode_image(patch.image(), dtype))?;
    write_atomic(&sidecar_path(&dir.join(&image_rel)), &to_json_bytes(&header)?)?;
    write_atomic(&dir.join(&label_rel), patch.labels().cells())?;
    Ok(ManifestEntry {
        patch_id: patch.patch_id.clone(),
        scene_id: patch.scene_id.clone(),
        region: patch.region,
        season: patch.season,
        image_path: Some(image_rel),
        label_path: Some(label_rel),
    })
}

/// Where patches come from. Loading is reentrant, so callers may load in parallel.
pub trait PatchSource: Sync {
    fn load(&self, entry: &ManifestEntry) -> Result<Patch>;
}

/// Reads patch files relative to a manifest directory.
#[derive(Debug, Clone)]
pub struct FileSource {
    root: PathBuf,
}

impl FileSource {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FileSource { root: root.into() }
    }

    pub fn for_manifest(manifest: &Manifest) -> Self {
        FileSource::new(manifest.root())
    }
}

impl PatchSource for FileSource {
    fn load(&self, entry: &ManifestEntry) -> Result<Patch> {
        load_patch(&self.root, entry)
    }
}

/// Patches held in memory, keyed by patch id.
#[derive(Debug, Clone, Default)]
pub struct InMemorySource {
    patches: BTreeMap<String, Patch>,
}

impl InMemorySource {
    pub fn new(patches: impl IntoIterator<Item = Patch>) -> Self {
        InMemorySource {
            patches: patches.into_iter().map(|p| (p.patch_id.clone(), p)).collect(),
        }
    }

    pub fn insert(&mut self, patch: Patch) {
        self.patches.insert(patch.patch_id.clone(), patch);
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }
}

impl PatchSource for InMemorySource {
    fn load(&self, entry: &ManifestEntry) -> Result<Patch> {
        self.patches
            .get(&entry.patch_id)
            .cloned()
            .ok_or_else(|| Error::InvalidParameter(format!("patch {} is not loaded", entry.patch_id)))
    }
}
