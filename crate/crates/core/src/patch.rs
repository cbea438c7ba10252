use serde::{Deserialize, Serialize};

use crate::bands::{Band, BAND_COUNT};
use crate::error::{Error, Result};
use crate::groups::{Region, Season};
use crate::labels::CLASS_COUNT;

/// Patch side length in pixels. One pixel covers 10 m × 10 m on the ground.
pub const PATCH_SIZE: usize = 256;
pub const PATCH_PIXELS: usize = PATCH_SIZE * PATCH_SIZE;
pub const GROUND_SAMPLE_METERS: f64 = 10.0;

/// A row-major grid of consolidated class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGrid {
    height: usize,
    width: usize,
    cells: Vec<u8>,
}

impl ClassGrid {
    pub fn new(height: usize, width: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{height}x{width} = {} cells", height * width),
                actual: format!("{} cells", cells.len()),
            });
        }
        if let Some(&bad) = cells.iter().find(|&&c| c as usize >= CLASS_COUNT) {
            return Err(Error::ClassOutOfRange(bad));
        }
        Ok(ClassGrid { height, width, cells })
    }

    pub fn filled(height: usize, width: usize, class: u8) -> Result<Self> {
        Self::new(height, width, vec![class; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<u8> {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// One 256×256 tile: ten reflectance bands stored band-major plus the label mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub patch_id: String,
    pub scene_id: String,
    pub region: Region,
    pub season: Season,
    image: Vec<f32>,
    labels: ClassGrid,
}

impl Patch {
    pub fn new(
        patch_id: impl Into<String>,
        scene_id: impl Into<String>,
        region: Region,
        season: Season,
        image: Vec<f32>,
        labels: ClassGrid,
    ) -> Result<Self> {
        let patch_id = patch_id.into();
        let expected = BAND_COUNT * PATCH_PIXELS;
        if image.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{BAND_COUNT}x{PATCH_SIZE}x{PATCH_SIZE} = {expected} values"),
                actual: format!("{} values", image.len()),
            });
        }
        if labels.shape() != (PATCH_SIZE, PATCH_SIZE) {
            return Err(Error::ShapeMismatch {
                expected: format!("{PATCH_SIZE}x{PATCH_SIZE} labels"),
                actual: format!("{}x{} labels", labels.height(), labels.width()),
            });
        }
        if let Some(index) = image.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { patch: patch_id, index });
        }
        Ok(Patch {
            patch_id,
            scene_id: scene_id.into(),
            region,
            season,
            image,
            labels,
        })
    }

    /// Full band-major tensor, `band * PATCH_PIXELS + row * PATCH_SIZE + col`.
    pub fn image(&self) -> &[f32] {
        &self.image
    }

    pub fn band(&self, band: Band) -> &[f32] {
        self.band_at(band.index())
    }

    pub fn band_at(&self, index: usize) -> &[f32] {
        &self.image[index * PATCH_PIXELS..(index + 1) * PATCH_PIXELS]
    }

    pub fn labels(&self) -> &ClassGrid {
        &self.labels
    }

    /// Ground footprint edge length in meters.
    pub fn extent_meters() -> f64 {
        PATCH_SIZE as f64 * GROUND_SAMPLE_METERS
    }
}
