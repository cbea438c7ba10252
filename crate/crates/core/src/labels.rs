//! Land-use label scheme: the 11 raw LCCS land-use classes and their
//! consolidation into 8 output classes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CLASS_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConsolidatedClass {
    DenseForests,
    OpenForests,
    NaturalHerbaceous,
    Shrublands,
    UrbanAndBuiltUp,
    PermanentSnowAndIce,
    Barren,
    WaterBodies,
}

impl ConsolidatedClass {
    pub const ALL: [ConsolidatedClass; CLASS_COUNT] = [
        ConsolidatedClass::DenseForests,
        ConsolidatedClass::OpenForests,
        ConsolidatedClass::NaturalHerbaceous,
        ConsolidatedClass::Shrublands,
        ConsolidatedClass::UrbanAndBuiltUp,
        ConsolidatedClass::PermanentSnowAndIce,
        ConsolidatedClass::Barren,
        ConsolidatedClass::WaterBodies,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(index: u8) -> Result<Self> {
        Self::ALL
            .get(index as usize)
            .copied()
            .ok_or(Error::ClassOutOfRange(index))
    }

    pub fn name(self) -> &'static str {
        match self {
            ConsolidatedClass::DenseForests => "Dense Forests",
            ConsolidatedClass::OpenForests => "Open Forests",
            ConsolidatedClass::NaturalHerbaceous => "Natural Herbaceous",
            ConsolidatedClass::Shrublands => "Shrublands",
            ConsolidatedClass::UrbanAndBuiltUp => "Urban and Built-Up Lands",
            ConsolidatedClass::PermanentSnowAndIce => "Permanent Snow & Ice",
            ConsolidatedClass::Barren => "Barren",
            ConsolidatedClass::WaterBodies => "Water Bodies",
        }
    }

    /// Legend color as `#RRGGBB`.
    pub fn color(self) -> &'static str {
        match self {
            ConsolidatedClass::DenseForests => "#228B22",
            ConsolidatedClass::OpenForests => "#9ACD32",
            ConsolidatedClass::NaturalHerbaceous => "#DAA520",
            ConsolidatedClass::Shrublands => "#808000",
            ConsolidatedClass::UrbanAndBuiltUp => "#808080",
            ConsolidatedClass::PermanentSnowAndIce => "#FFFFFF",
            ConsolidatedClass::Barren => "#8B0000",
            ConsolidatedClass::WaterBodies => "#0000FF",
        }
    }
}

impl fmt::Display for ConsolidatedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw LCCS land-use class names, paired with their consolidated class.
const LCCS_LU: [(&str, ConsolidatedClass); 11] = [
    ("Dense Forests", ConsolidatedClass::DenseForests),
    ("Open Forests", ConsolidatedClass::OpenForests),
    ("Forest/Cropland Mosaics", ConsolidatedClass::OpenForests),
    ("Natural Herbaceous", ConsolidatedClass::NaturalHerbaceous),
    ("Herbaceous Croplands", ConsolidatedClass::NaturalHerbaceous),
    (
        "Natural Herbaceous/Cropland Mosaics",
        ConsolidatedClass::NaturalHerbaceous,
    ),
    ("Shrublands", ConsolidatedClass::Shrublands),
    ("Urban and Built-Up Lands", ConsolidatedClass::UrbanAndBuiltUp),
    ("Permanent Snow & Ice", ConsolidatedClass::PermanentSnowAndIce),
    ("Barren", ConsolidatedClass::Barren),
    ("Water Bodies", ConsolidatedClass::WaterBodies),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelScheme {
    pub name: &'static str,
    mapping: &'static [(&'static str, ConsolidatedClass)],
}

impl LabelScheme {
    pub fn lccs_land_use() -> Self {
        LabelScheme {
            name: "LCCS-LU consolidated",
            mapping: &LCCS_LU,
        }
    }

    pub fn raw_classes(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.mapping.iter().map(|(name, _)| *name)
    }

    /// Maps a raw class name to its consolidated class. Surrounding whitespace is ignored;
    /// the name itself is matched exactly.
    pub fn consolidate(&self, raw_class: &str) -> Result<ConsolidatedClass> {
        let key = raw_class.trim();
        self.mapping
            .iter()
            .find(|(name, _)| *name == key)
            .map(|(_, class)| *class)
            .ok_or_else(|| Error::UnknownRawClass(raw_class.to_string()))
    }
}

pub fn consolidate_label(raw_class: &str) -> Result<ConsolidatedClass> {
    LabelScheme::lccs_land_use().consolidate(raw_class)
}

/// Class → legend color, in class-index order.
pub fn class_palette() -> [(ConsolidatedClass, &'static str); CLASS_COUNT] {
    ConsolidatedClass::ALL.map(|c| (c, c.color()))
}
