//! Sentinel-2 input bands in their fixed on-disk order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BAND_COUNT: usize = 10;

/// Upper bound of the reflectance scale; values are clipped into `[0, MAX_REFLECTANCE]` on load.
pub const MAX_REFLECTANCE: f32 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Blue,
    Green,
    Red,
    Re1,
    Re2,
    Re3,
    Nir1,
    Nir2,
    Swir1,
    Swir2,
}

impl Band {
    pub const ALL: [Band; BAND_COUNT] = [
        Band::Blue,
        Band::Green,
        Band::Red,
        Band::Re1,
        Band::Re2,
        Band::Re3,
        Band::Nir1,
        Band::Nir2,
        Band::Swir1,
        Band::Swir2,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Band> {
        Band::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Band::Blue => "blue",
            Band::Green => "green",
            Band::Red => "red",
            Band::Re1 => "re1",
            Band::Re2 => "re2",
            Band::Re3 => "re3",
            Band::Nir1 => "nir1",
            Band::Nir2 => "nir2",
            Band::Swir1 => "swir1",
            Band::Swir2 => "swir2",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Band {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Band::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown band {s:?}")))
    }
}

/// Band names in registry order.
pub fn band_names() -> [&'static str; BAND_COUNT] {
    Band::ALL.map(Band::name)
}
