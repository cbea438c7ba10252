use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use geoshift::export::{line_chart, Series};
use geoshift::stats::{band_samples, kde_auto, patch_band_stats, BandAccumulator, RunningStats};
use geoshift::{load_manifest, Band, DensityCurve, Grouping, BAND_COUNT};
use serde::Serialize;

use super::map_patches;
use crate::args::Format;
use crate::output::{slug, Outputs, RunConfig};

const ALL: &str = "all";

struct GroupData {
    acc: BandAccumulator,
    samples: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct GroupCurves<'a> {
    group: &'a str,
    curves: &'a [DensityCurve],
}

pub fn run(
    manifest_path: &Path,
    output_dir: &Path,
    stride: usize,
    grid: usize,
    group_by: Option<Grouping>,
    format: Format,
) -> Result<()> {
    if stride == 0 {
        bail!("--stride must be at least 1");
    }
    if grid < 2 {
        bail!("--grid must be at least 2");
    }
    let manifest = load_manifest(manifest_path)?;
    if manifest.is_empty() {
        bail!("manifest {} has no patches", manifest_path.display());
    }
    let run = RunConfig {
        grouping: group_by.map(|g| g.name().to_string()),
        stride: Some(stride),
        grid: Some(grid),
        ..RunConfig::new("stats")
    }
    .manifest(manifest_path)
    .output_dir(output_dir)
    .param("format", format!("{format:?}").to_lowercase());

    let group_of = |e: &geoshift::ManifestEntry| group_by.map_or(ALL, |g| g.label(e));
    let order: Vec<&str> = group_by.map_or(vec![ALL], |g| manifest.groups(g));
    let mut groups: BTreeMap<&str, GroupData> = order
        .iter()
        .map(|&g| {
            (
                g,
                GroupData {
                    acc: BandAccumulator::default(),
                    samples: vec![Vec::new(); BAND_COUNT],
                },
            )
        })
        .collect();

    let per_patch = map_patches(&manifest, |entry, patch| {
        let partial: [RunningStats; BAND_COUNT] = patch_band_stats(patch, stride);
        let samples = Band::ALL
            .iter()
            .map(|&b| band_samples(patch, b, stride))
            .collect::<geoshift::Result<Vec<_>>>()?;
        Ok((group_of(entry), partial, samples))
    })?;
    let mut overall = BandAccumulator::default();
    for (group, partial, samples) in per_patch {
        overall.add_partial(&partial);
        let data = groups.get_mut(group).expect("group comes from the manifest");
        data.acc.add_partial(&partial);
        for (all, s) in data.samples.iter_mut().zip(samples) {
            all.extend(s);
        }
    }

    let mut out = Outputs::new(output_dir, run)?;
    let summary = overall.finish()?;
    let mut curves: Vec<(&str, Vec<DensityCurve>)> = Vec::new();
    for &g in &order {
        let data = &groups[g];
        let band_curves = Band::ALL
            .iter()
            .zip(&data.samples)
            .map(|(&band, samples)| {
                let mut curve =
                    kde_auto(samples, grid).with_context(|| format!("density of band {band} in group {g}"))?;
                curve.band = Some(band);
                Ok(curve)
            })
            .collect::<Result<Vec<_>>>()?;
        curves.push((g, band_curves));
    }

    match format {
        Format::Json => {
            out.json("band_summary.json", &summary)?;
            for &g in &order {
                out.json(&format!("band_summary_{}.json", slug(g)), &groups[g].acc.finish()?)?;
            }
            for (g, c) in &curves {
                out.json(&format!("kde/{}.json", slug(g)), &GroupCurves { group: g, curves: c })?;
            }
        }
        Format::Csv | Format::Svg => {
            out.bytes("band_summary.csv", &summary.to_csv()?)?;
            for &g in &order {
                out.bytes(
                    &format!("band_summary_{}.csv", slug(g)),
                    &groups[g].acc.finish()?.to_csv()?,
                )?;
            }
            for (g, c) in &curves {
                for curve in c {
                    let band = curve.band.expect("band is set above");
                    out.bytes(&format!("kde/{}_{}.csv", slug(g), band.name()), &curve.to_csv()?)?;
                }
            }
        }
    }
    if format == Format::Svg {
        for band in Band::ALL {
            let series: Vec<Series<'_>> = curves
                .iter()
                .map(|(g, c)| Series {
                    label: g,
                    x: &c[band.index()].grid,
                    y: &c[band.index()].density,
                })
                .collect();
            out.svg(
                &format!("kde/{}.svg", band.name()),
                &line_chart(&format!("{band} density"), &series),
            )?;
        }
    }
    out.finish()?;
    Ok(())
}
