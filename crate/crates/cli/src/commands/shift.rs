use anyhow::{bail, Context, Result};
use geoshift::export::{grouped_bar_chart, scatter_chart};
use geoshift::kmeans::read_assignments_csv;
use geoshift::shift::{coverage_to_csv, histograms_to_csv};
use geoshift::{
    cluster_histogram, coverage_score, group_given_cluster, load_manifest, pca_embed, ClusterModel, Correction,
};
use serde::Serialize;

use super::map_patches;
use crate::args::{Format, ShiftArgs};
use crate::output::{Outputs, RunConfig};

#[derive(Serialize)]
struct Histograms<'a> {
    histograms: &'a [geoshift::ClusterHistogram],
}

#[derive(Serialize)]
struct Coverage<'a> {
    reports: &'a [geoshift::shift::CoverageReport],
}

pub fn run(args: &ShiftArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let assignments = read_assignments_csv(&args.assignments)
        .with_context(|| format!("cannot read assignments {}", args.assignments.display()))?;
    let model = args
        .model
        .as_deref()
        .map(|p| ClusterModel::load(p).with_context(|| format!("cannot read model {}", p.display())))
        .transpose()?;
    let k = match (&model, args.k) {
        (Some(m), Some(k)) if m.k != k => bail!("--k {k} disagrees with the model's K = {}", m.k),
        (Some(m), _) => m.k,
        (None, Some(k)) => k,
        (None, None) => assignments.iter().map(|a| a.cluster + 1).max().unwrap_or(0),
    };
    let correction = if args.bayes {
        Correction::Bayes
    } else {
        Correction::ImbalanceCorrected
    };
    let run = RunConfig {
        grouping: Some(args.group_by.name().to_string()),
        k: Some(k),
        ..RunConfig::new("shift")
    }
    .manifest(&args.manifest)
    .output_dir(&args.output_dir)
    .param("assignments", args.assignments.display().to_string())
    .param("model", args.model.as_ref().map(|p| p.display().to_string()))
    .param("pca", args.pca)
    .param("pcond", args.pcond)
    .param("correction", correction)
    .param("coverage", args.coverage.as_ref().map(|p| p.display().to_string()))
    .param("training_group", &args.training_group)
    .param("format", format!("{:?}", args.format).to_lowercase());

    let groups = manifest.group_map(args.group_by);
    let order = manifest.groups(args.group_by);
    let histograms = cluster_histogram(&assignments, k, &groups, &order)?;
    let mut out = Outputs::new(&args.output_dir, run)?;
    let json = args.format == Format::Json;
    let svg = args.format == Format::Svg;

    if json {
        out.json(
            "histograms.json",
            &Histograms {
                histograms: &histograms,
            },
        )?;
    } else {
        out.bytes("histograms.csv", &histograms_to_csv(&histograms)?)?;
    }

    if args.pcond {
        let table = group_given_cluster(&histograms, correction)?;
        if json {
            out.json("p_group_given_cluster.json", &table)?;
        } else {
            out.bytes("p_group_given_cluster.csv", &table.to_csv()?)?;
        }
        if svg {
            let series: Vec<(&str, Vec<f64>)> = table
                .groups
                .iter()
                .zip(&table.values)
                .map(|(g, row)| {
                    (
                        g.as_str(),
                        row.iter().map(|v| if v.is_nan() { 0.0 } else { *v }).collect(),
                    )
                })
                .collect();
            let title = format!("P({} | cluster)", args.group_by);
            out.svg("p_group_given_cluster.svg", &grouped_bar_chart(&title, k, &series))?;
        }
    }

    if args.pca {
        let embedding = pca_embed(&histograms, 2.min(k))?;
        if json {
            out.json("pca.json", &embedding)?;
        } else {
            out.bytes("pca.csv", &embedding.to_csv()?)?;
        }
        if svg {
            let points: Vec<(&str, f64, f64)> = embedding
                .groups
                .iter()
                .zip(&embedding.coordinates)
                .map(|(g, c)| (g.as_str(), c[0], c.get(1).copied().unwrap_or(0.0)))
                .collect();
            out.svg("pca.svg", &scatter_chart("Cluster-mixture PCA", &points))?;
        }
    }

    if let Some(new_manifest) = &args.coverage {
        let Some(model) = &model else {
            bail!("--coverage needs --model");
        };
        let Some(training_group) = &args.training_group else {
            bail!("--coverage needs --training-group");
        };
        if !order.contains(&training_group.as_str()) {
            bail!(
                "training group {training_group:?} has no patches in {}",
                args.manifest.display()
            );
        }
        let new = load_manifest(new_manifest)?;
        let reports = map_patches(&new, |_, patch| {
            coverage_score(model, &assignments, &groups, training_group, patch)
        })?;
        if json {
            out.json("coverage.json", &Coverage { reports: &reports })?;
        } else {
            out.bytes("coverage.csv", &coverage_to_csv(&reports)?)?;
        }
    }
    out.finish()?;
    Ok(())
}
