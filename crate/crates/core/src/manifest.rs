//! Dataset index: one row per patch, grouped into scenes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{Grouping, Region, Season};

pub const MANIFEST_HEADER: [&str; 6] = ["patch_id", "scene_id", "region", "season", "image_path", "label_path"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub patch_id: String,
    pub scene_id: String,
    pub region: Region,
    pub season: Season,
    /// Relative to the manifest directory; `None` in metadata-only manifests.
    pub image_path: Option<PathBuf>,
    pub label_path: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn metadata_only(
        patch_id: impl Into<String>,
        scene_id: impl Into<String>,
        region: Region,
        season: Season,
    ) -> Self {
        ManifestEntry {
            patch_id: patch_id.into(),
            scene_id: scene_id.into(),
            region,
            season,
            image_path: None,
            label_path: None,
        }
    }
}

/// Entries are kept sorted by `patch_id`, so row order in the source file does not matter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    scenes: BTreeMap<String, Vec<usize>>,
}

impl Manifest {
    pub fn new(root: impl Into<PathBuf>, mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.patch_id.cmp(&b.patch_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].patch_id == w[1].patch_id) {
            return Err(Error::DuplicatePatchId(w[0].patch_id.clone()));
        }
        let mut scenes: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, entry) in entries.iter().enumerate() {
            let members = scenes.entry(entry.scene_id.clone()).or_default();
            if let Some(&first) = members.first() {
                let head = &entries[first];
                if head.region != entry.region {
                    return Err(Error::InconsistentScene {
                        scene: entry.scene_id.clone(),
                        field: "region",
                        first: head.region.to_string(),
                        second: entry.region.to_string(),
                    });
                }
                if head.season != entry.season {
                    return Err(Error::InconsistentScene {
                        scene: entry.scene_id.clone(),
                        field: "season",
                        first: head.season.to_string(),
                        second: entry.season.to_string(),
                    });
                }
            }
            members.push(i);
        }
        Ok(Manifest {
            root: root.into(),
            entries,
            scenes,
        })
    }

    pub fn empty(root: impl Into<PathBuf>) -> Self {
        Manifest {
            root: root.into(),
            entries: Vec::new(),
            scenes: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, patch_id: &str) -> Option<&ManifestEntry> {
        self.entries
            .binary_search_by(|e| e.patch_id.as_str().cmp(patch_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn scene_ids(&self) -> impl Iterator<Item = &str> {
        self.scenes.keys().map(String::as_str)
    }

    pub fn scene_count(&self) -> usize {
        self.scenes.len()
    }

    /// Entries of one scene in `patch_id` order; empty for unknown scenes.
    pub fn scene(&self, scene_id: &str) -> Vec<&ManifestEntry> {
        self.scenes
            .get(scene_id)
            .map(|ix| ix.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    pub fn scene_patch_ids(&self, scene_id: &str) -> Vec<&str> {
        self.scene(scene_id).into_iter().map(|e| e.patch_id.as_str()).collect()
    }

    /// Group labels present in the manifest, in canonical vocabulary order.
    pub fn groups(&self, grouping: Grouping) -> Vec<&'static str> {
        let present: BTreeSet<&str> = self.entries.iter().map(|e| grouping.label(e)).collect();
        grouping
            .vocabulary()
            .into_iter()
            .filter(|g| present.contains(g))
            .collect()
    }

    /// Sorted scene ids whose patches carry the given group label.
    pub fn scenes_in_group(&self, grouping: Grouping, group: &str) -> Vec<&str> {
        self.scenes
            .iter()
            .filter(|(_, ix)| grouping.label(&self.entries[ix[0]]) == group)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// patch_id → group label for every entry.
    pub fn group_map(&self, grouping: Grouping) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|e| (e.patch_id.clone(), grouping.label(e).to_string()))
            .collect()
    }

    pub fn resolve(&self, relative: &Path) -> PathBuf {
        if relative.is_absolute() {
            relative.to_path_buf()
        } else {
            self.root.join(relative)
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    if !path.is_file() {
        return Err(Error::ManifestNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    if header.iter().map(str::trim).ne(MANIFEST_HEADER) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!(
                "expected header {:?}, found {:?}",
                MANIFEST_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |reason: String| Error::MalformedRow { line, reason };
        if record.len() != MANIFEST_HEADER.len() {
            return Err(malformed(format!(
                "expected {} fields, found {}",
                MANIFEST_HEADER.len(),
                record.len()
            )));
        }
        let field = |i: usize| record[i].trim();
        if field(0).is_empty() {
            return Err(malformed("empty patch_id".into()));
        }
        if field(1).is_empty() {
            return Err(malformed("empty scene_id".into()));
        }
        let region: Region = field(2).parse().map_err(|e: Error| malformed(e.to_string()))?;
        let season: Season = field(3).parse().map_err(|e: Error| malformed(e.to_string()))?;
        let (image_path, label_path) = match (field(4), field(5)) {
            ("", "") => (None, None),
            (img, lbl) if !img.is_empty() && !lbl.is_empty() => (Some(PathBuf::from(img)), Some(PathBuf::from(lbl))),
            _ => {
                return Err(malformed(
                    "image_path and label_path must both be set or both be empty".into(),
                ))
            }
        };
        entries.push(ManifestEntry {
            patch_id: field(0).to_string(),
            scene_id: field(1).to_string(),
            region,
            season,
            image_path,
            label_path,
        });
    }
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Manifest::new(root, entries)
}

/// Serializes entries in `patch_id` order.
pub fn manifest_to_csv(manifest: &Manifest) -> Result<Vec<u8>> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(MANIFEST_HEADER)?;
    for e in manifest.entries() {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned()).unwrap_or_default();
        writer.write_record([
            e.patch_id.as_str(),
            e.scene_id.as_str(),
            e.region.name(),
            e.season.name(),
            &path(&e.image_path),
            &path(&e.label_path),
        ])?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io("flush manifest csv", e.into_error()))
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    crate::export::write_atomic(path, &manifest_to_csv(manifest)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub scenes: usize,
    pub patches: usize,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.scenes += rhs.scenes;
        self.patches += rhs.patches;
    }
}

/// Scene and patch counts per (region, season) with marginal totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    cells: [[Counts; 4]; 6],
}

impl DatasetSummary {
    pub fn cell(&self, region: Region, season: Season) -> Counts {
        self.cells[region as usize][season as usize]
    }

    pub fn region_total(&self, region: Region) -> Counts {
        let mut total = Counts::default();
        for c in self.cells[region as usize] {
            total += c;
        }
        total
    }

    pub fn season_total(&self, season: Season) -> Counts {
        let mut total = Counts::default();
        for row in &self.cells {
            total += row[season as usize];
        }
        total
    }

    pub fn total(&self) -> Counts {
        let mut total = Counts::default();
        for region in Region::ALL {
            total += self.region_total(region);
        }
        total
    }

    /// Human-readable grid, one row per region: `scenes (patches)` per season plus a total column.
    pub fn to_table(&self) -> String {
        fn fmt_counts(c: Counts) -> String {
            format!("{} ({})", c.scenes, thousands(c.patches))
        }
        let mut header = vec![String::from("Continent / Season")];
        header.extend(Season::ALL.iter().map(|s| s.to_string()));
        header.push("Total".into());
        let mut rows = vec![header];
        for region in Region::ALL {
            let mut row = vec![region.to_string()];
            row.extend(Season::ALL.iter().map(|&s| fmt_counts(self.cell(region, s))));
            row.push(fmt_counts(self.region_total(region)));
            rows.push(row);
        }
        let mut footer = vec![String::from("Total")];
        footer.extend(Season::ALL.iter().map(|&s| fmt_counts(self.season_total(s))));
        footer.push(fmt_counts(self.total()));
        rows.push(footer);

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in rows {
            let line: Vec<String> = row.iter().zip(&widths).map(|(cell, w)| format!("{cell:<w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    /// `region,season,scenes,patches`, including `Total` marginal rows.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(["region", "season", "scenes", "patches"])?;
        let mut row =
            |r: &str, s: &str, c: Counts| writer.write_record([r, s, &c.scenes.to_string(), &c.patches.to_string()]);
        for region in Region::ALL {
            for season in Season::ALL {
                row(region.name(), season.name(), self.cell(region, season))?;
            }
            row(region.name(), "Total", self.region_total(region))?;
        }
        for season in Season::ALL {
            row("Total", season.name(), self.season_total(season))?;
        }
        row("Total", "Total", self.total())?;
        writer
            .into_inner()
            .map_err(|e| Error::io("flush summary csv", e.into_error()))
    }
}

fn thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

pub fn summarize_manifest(manifest: &Manifest) -> DatasetSummary {
    let mut cells = [[Counts::default(); 4]; 6];
    for scene in manifest.scene_ids() {
        let members = manifest.scene(scene);
        let head = members[0];
        let cell = &mut cells[head.region as usize][head.season as usize];
        cell.scenes += 1;
        cell.patches += members.len();
    }
    DatasetSummary { cells }
}
