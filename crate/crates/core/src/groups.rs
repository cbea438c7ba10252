//! Region and season vocabularies, and the grouping used to slice a manifest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::ManifestEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "Africa")]
    Africa,
    #[serde(rename = "Asia")]
    Asia,
    #[serde(rename = "Australia")]
    Australia,
    #[serde(rename = "Europe")]
    Europe,
    #[serde(rename = "North America")]
    NorthAmerica,
    #[serde(rename = "South America")]
    SouthAmerica,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::Africa,
        Region::Asia,
        Region::Australia,
        Region::Europe,
        Region::NorthAmerica,
        Region::SouthAmerica,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Africa => "Africa",
            Region::Asia => "Asia",
            Region::Australia => "Australia",
            Region::Europe => "Europe",
            Region::NorthAmerica => "North America",
            Region::SouthAmerica => "South America",
        }
    }

    /// Short slug used in generated identifiers and file names.
    pub fn slug(self) -> &'static str {
        match self {
            Region::Africa => "africa",
            Region::Asia => "asia",
            Region::Australia => "australia",
            Region::Europe => "europe",
            Region::NorthAmerica => "north_america",
            Region::SouthAmerica => "south_america",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let region = match key.as_str() {
            "africa" => Region::Africa,
            "asia" => Region::Asia,
            "australia" => Region::Australia,
            "europe" => Region::Europe,
            "north america" | "n. america" | "north_america" => Region::NorthAmerica,
            "south america" | "s. america" | "south_america" => Region::SouthAmerica,
            _ => return Err(Error::UnknownRegion(s.to_string())),
        };
        Ok(region)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Season {
    Spring,
    Summer,
    Fall,
    Winter,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Spring, Season::Summer, Season::Fall, Season::Winter];

    pub fn name(self) -> &'static str {
        match self {
            Season::Spring => "Spring",
            Season::Summer => "Summer",
            Season::Fall => "Fall",
            Season::Winter => "Winter",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Season {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        Season::ALL
            .into_iter()
            .find(|season| season.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::UnknownSeason(s.to_string()))
    }
}

/// How patches are grouped for cross-group analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    Continent,
    Season,
}

impl Grouping {
    pub fn name(self) -> &'static str {
        match self {
            Grouping::Continent => "continent",
            Grouping::Season => "season",
        }
    }

    pub fn label(self, entry: &ManifestEntry) -> &'static str {
        match self {
            Grouping::Continent => entry.region.name(),
            Grouping::Season => entry.season.name(),
        }
    }

    /// Every label of this grouping's vocabulary, in canonical order.
    pub fn vocabulary(self) -> Vec<&'static str> {
        match self {
            Grouping::Continent => Region::ALL.iter().map(|r| r.name()).collect(),
            Grouping::Season => Season::ALL.iter().map(|s| s.name()).collect(),
        }
    }

    /// Canonical position of a label, used to order groups in reports.
    pub fn rank(self, label: &str) -> Option<usize> {
        self.vocabulary().iter().position(|v| *v == label)
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continent" | "region" => Ok(Grouping::Continent),
            "season" => Ok(Grouping::Season),
            _ => Err(Error::UnknownGrouping(s.to_string())),
        }
    }
}
