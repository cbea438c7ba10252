use anyhow::Result;
use geoshift::eval::{cross_group_experiment, cross_group_experiment_with, AccuracyMatrix, LabelsOracle};
use geoshift::{load_manifest, FileSource};
use serde::Serialize;

use crate::args::EvaluateArgs;
use crate::output::{slug, Outputs, RunConfig};

#[derive(Serialize)]
struct Splits<'a> {
    splits: &'a [geoshift::eval::experiment::GroupSplit],
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let source = FileSource::for_manifest(&manifest);
    let config = args.train.to_config();
    config.validate()?;
    let run = RunConfig {
        seed: Some(args.seed),
        grouping: Some(args.group_by.name().to_string()),
        train: Some(config.clone()),
        ..RunConfig::new("evaluate")
    }
    .manifest(&args.manifest)
    .output_dir(&args.output_dir)
    .param(
        "predictor",
        if args.oracle_predictor {
            "labels-oracle"
        } else {
            "baseline"
        },
    );

    let mut out = Outputs::new(&args.output_dir, run)?;
    let matrix: AccuracyMatrix = if args.oracle_predictor {
        let outcome = cross_group_experiment_with(&manifest, &source, args.group_by, &config, args.seed, |_| {
            Ok(LabelsOracle)
        })?;
        out.json(
            "splits.json",
            &Splits {
                splits: &outcome.splits,
            },
        )?;
        outcome.matrix
    } else {
        let outcome = cross_group_experiment(&manifest, &source, args.group_by, &config, args.seed)?;
        out.json(
            "splits.json",
            &Splits {
                splits: &outcome.splits,
            },
        )?;
        for (group, model) in &outcome.models {
            out.json(&format!("models/{}.json", slug(group)), model)?;
        }
        outcome.matrix
    };
    out.bytes("accuracy_matrix.csv", &matrix.to_csv()?)?;
    out.json("accuracy_matrix.json", &matrix)?;
    out.bytes("scenes.csv", &matrix.scenes_to_csv()?)?;
    out.finish()?;

    print!("{}", String::from_utf8_lossy(&matrix.to_csv()?));
    println!(
        "diagonal mean {:.4}, off-diagonal mean {:.4}",
        matrix.diagonal_mean(),
        matrix.off_diagonal_mean()
    );
    Ok(())
}
