use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::Grouping;
use crate::manifest::Manifest;
use crate::seed::rng;

pub const DEFAULT_VAL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SceneSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
}

/// Number of withheld scenes: `ceil(fraction * n)`, at least 1 and at most `n - 1`.
pub fn validation_count(n: usize, fraction: f64) -> usize {
    // the epsilon keeps exact products such as 0.2 * 10 from rounding up
    let raw = (fraction * n as f64 - 1e-9).ceil().max(1.0) as usize;
    raw.min(n.saturating_sub(1))
}

/// Scene-level split of one group. The sorted scenes are shuffled by `seed`
/// and the first `validation_count` withheld; both lists come back sorted.
pub fn split_scenes(
    manifest: &Manifest,
    grouping: Grouping,
    group: &str,
    val_fraction: f64,
    seed: u64,
) -> Result<SceneSplit> {
    if !(0.0..1.0).contains(&val_fraction) {
        return Err(Error::InvalidParameter(format!(
            "validation fraction must be in [0, 1), got {val_fraction}"
        )));
    }
    let mut scenes: Vec<String> = manifest
        .scenes_in_group(grouping, group)
        .into_iter()
        .map(str::to_string)
        .collect();
    if scenes.len() < 2 {
        return Err(Error::TooFewScenes {
            group: group.to_string(),
            n: scenes.len(),
        });
    }
    scenes.shuffle(&mut rng(seed));
    let n_val = validation_count(scenes.len(), val_fraction);
    let mut validation = scenes.split_off(scenes.len() - n_val);
    let mut train = scenes;
    validation.sort();
    train.sort();
    Ok(SceneSplit { train, validation })
}
