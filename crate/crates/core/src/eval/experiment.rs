use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::eval::accuracy::{scene_accuracy, AccuracyMatrix, Classifier, SceneRecord};
use crate::eval::baseline::{train_baseline, BaselineModel, TrainConfig};
use crate::eval::split::{split_scenes, SceneSplit, DEFAULT_VAL_FRACTION};
use crate::groups::Grouping;
use crate::manifest::{Manifest, ManifestEntry};
use crate::patch_io::PatchSource;
use crate::seed::derive_seed;

#[derive(Debug, Clone, Serialize)]
pub struct GroupSplit {
    pub group: String,
    pub seed: u64,
    #[serde(flatten)]
    pub split: SceneSplit,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome<M> {
    pub matrix: AccuracyMatrix,
    pub splits: Vec<GroupSplit>,
    /// One trained model per group, in matrix row order.
    pub models: Vec<(String, M)>,
}

/// What a group's model is fitted on. `config.seed` is already derived for the group.
pub struct FitInput<'a> {
    pub group: &'a str,
    pub train: &'a [&'a ManifestEntry],
    pub validation: &'a [&'a ManifestEntry],
    pub config: &'a TrainConfig,
}

fn scene_entries<'m>(manifest: &'m Manifest, scenes: &[String]) -> Vec<&'m ManifestEntry> {
    scenes.iter().flat_map(|s| manifest.scene(s)).collect()
}

/// Trains one baseline per group and fills the cross-group accuracy matrix.
pub fn cross_group_experiment(
    manifest: &Manifest,
    source: &dyn PatchSource,
    grouping: Grouping,
    config: &TrainConfig,
    seed: u64,
) -> Result<ExperimentOutcome<BaselineModel>> {
    cross_group_experiment_with(manifest, source, grouping, config, seed, |input| {
        train_baseline(source, input.train, input.validation, input.config)
    })
}

/// Like [`cross_group_experiment`] with a caller-supplied model fit.
///
/// Each group's scenes are split with a seed derived from `seed` and the group
/// label before the model is fitted on the training part. Scene accuracies
/// come from that group's validation scenes on the diagonal and from every
/// scene of the other groups elsewhere.
pub fn cross_group_experiment_with<M, F>(
    manifest: &Manifest,
    source: &dyn PatchSource,
    grouping: Grouping,
    config: &TrainConfig,
    seed: u64,
    mut fit: F,
) -> Result<ExperimentOutcome<M>>
where
    M: Classifier,
    F: FnMut(FitInput<'_>) -> Result<M>,
{
    let groups: Vec<String> = manifest.groups(grouping).into_iter().map(str::to_string).collect();
    let mut splits = Vec::with_capacity(groups.len());
    for g in &groups {
        let split_seed = derive_seed(seed, &format!("split/{g}"));
        let split = split_scenes(manifest, grouping, g, DEFAULT_VAL_FRACTION, split_seed)?;
        splits.push(GroupSplit {
            group: g.clone(),
            seed: split_seed,
            split,
        });
    }

    let mut models = Vec::with_capacity(groups.len());
    let mut records = Vec::new();
    for (g, gs) in groups.iter().zip(&splits) {
        let train = scene_entries(manifest, &gs.split.train);
        let validation = scene_entries(manifest, &gs.split.validation);
        let group_config = TrainConfig {
            seed: derive_seed(seed, &format!("train/{g}")),
            ..config.clone()
        };
        let model = fit(FitInput {
            group: g,
            train: &train,
            validation: &validation,
            config: &group_config,
        })?;

        let mut jobs: Vec<(&str, &str)> = Vec::new();
        for (eval_group, eval_split) in groups.iter().zip(&splits) {
            if eval_group == g {
                jobs.extend(gs.split.validation.iter().map(|s| (g.as_str(), s.as_str())));
            } else {
                let all = eval_split.split.train.iter().chain(&eval_split.split.validation);
                let mut scenes: Vec<&str> = all.map(String::as_str).collect();
                scenes.sort_unstable();
                jobs.extend(scenes.into_iter().map(|s| (eval_group.as_str(), s)));
            }
        }
        let scored: Vec<SceneRecord> = jobs
            .par_iter()
            .map(|&(eval_group, scene)| {
                let patches = manifest
                    .scene(scene)
                    .into_iter()
                    .map(|e| source.load(e))
                    .collect::<Result<Vec<_>>>()?;
                let acc = scene_accuracy(scene, &patches, &model)?;
                Ok(SceneRecord {
                    train_group: g.clone(),
                    eval_group: eval_group.to_string(),
                    scene_id: acc.scene_id,
                    correct: acc.correct,
                    total: acc.total,
                    accuracy: acc.accuracy,
                })
            })
            .collect::<Result<_>>()?;
        records.extend(scored);
        models.push((g.clone(), model));
    }

    let matrix = AccuracyMatrix::from_records(
        grouping.name(),
        groups,
        splits.iter().map(|s| s.split.train.len()).collect(),
        splits.iter().map(|s| s.split.validation.len()).collect(),
        records,
    )?;
    Ok(ExperimentOutcome { matrix, splits, models })
}
