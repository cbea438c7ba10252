use std::borrow::Borrow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::{csv_writer, finish_csv, fmt_f64, to_json_bytes};
use crate::patch::{ClassGrid, Patch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelAccuracy {
    pub correct: u64,
    pub total: u64,
    pub fraction: f64,
}

/// Fraction of cells where `pred` equals `label`.
pub fn pixel_accuracy(pred: &ClassGrid, label: &ClassGrid) -> Result<PixelAccuracy> {
    if pred.shape() != label.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{}", label.height(), label.width()),
            actual: format!("{}x{}", pred.height(), pred.width()),
        });
    }
    let correct = pred.cells().iter().zip(label.cells()).filter(|(a, b)| a == b).count() as u64;
    let total = label.len() as u64;
    Ok(PixelAccuracy {
        correct,
        total,
        fraction: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    })
}

/// Pixel-pooled overall accuracy of one scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneAccuracy {
    pub scene_id: String,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

/// Anything that maps a patch to a class grid.
pub trait Classifier: Sync {
    fn predict(&self, patch: &Patch) -> Result<ClassGrid>;
}

/// Returns each patch's own labels; a perfect predictor for plumbing checks.
#[derive(Debug, Clone, Copy, Default)]
pub struct LabelsOracle;

impl Classifier for LabelsOracle {
    fn predict(&self, patch: &Patch) -> Result<ClassGrid> {
        Ok(patch.labels().clone())
    }
}

impl<F> Classifier for F
where
    F: Fn(&Patch) -> Result<ClassGrid> + Sync,
{
    fn predict(&self, patch: &Patch) -> Result<ClassGrid> {
        self(patch)
    }
}

/// Pools correct and total pixel counts over all patches of a scene.
pub fn scene_accuracy<P: Borrow<Patch>>(
    scene_id: &str,
    patches: impl IntoIterator<Item = P>,
    predictor: &dyn Classifier,
) -> Result<SceneAccuracy> {
    let mut correct = 0;
    let mut total = 0;
    for patch in patches {
        let patch = patch.borrow();
        let acc = pixel_accuracy(&predictor.predict(patch)?, patch.labels())?;
        correct += acc.correct;
        total += acc.total;
    }
    if total == 0 {
        return Err(Error::EmptyInput("scene has no patches"));
    }
    Ok(SceneAccuracy {
        scene_id: scene_id.to_string(),
        correct,
        total,
        accuracy: correct as f64 / total as f64,
    })
}

/// Mean and population standard deviation of per-scene accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl CellStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Some(CellStats {
            mean,
            std: if n == 1 { 0.0 } else { var.sqrt() },
            n,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneRecord {
    pub train_group: String,
    pub eval_group: String,
    pub scene_id: String,
    pub correct: u64,
    pub total: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixCell {
    pub train_group: String,
    pub eval_group: String,
    /// Within-group validation cell.
    pub diagonal: bool,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Train-group × eval-group grid of per-scene overall-accuracy statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyMatrix {
    pub grouping: String,
    pub groups: Vec<String>,
    /// Row-major over `groups × groups`.
    pub cells: Vec<MatrixCell>,
    pub train_scene_counts: Vec<usize>,
    pub validation_scene_counts: Vec<usize>,
    pub std_convention: &'static str,
    pub scenes: Vec<SceneRecord>,
}

impl AccuracyMatrix {
    /// Aggregates per-scene records into cells. Every (train, eval) pair must have records.
    pub fn from_records(
        grouping: &str,
        groups: Vec<String>,
        train_scene_counts: Vec<usize>,
        validation_scene_counts: Vec<usize>,
        scenes: Vec<SceneRecord>,
    ) -> Result<Self> {
        let mut cells = Vec::with_capacity(groups.len() * groups.len());
        for train in &groups {
            for eval in &groups {
                let values: Vec<f64> = scenes
                    .iter()
                    .filter(|r| &r.train_group == train && &r.eval_group == eval)
                    .map(|r| r.accuracy)
                    .collect();
                let stats = CellStats::from_values(&values)
                    .ok_or_else(|| Error::InvalidParameter(format!("no evaluated scenes for {train} → {eval}")))?;
                cells.push(MatrixCell {
                    train_group: train.clone(),
                    eval_group: eval.clone(),
                    diagonal: train == eval,
                    mean: stats.mean,
                    std: stats.std,
                    n: stats.n,
                });
            }
        }
        Ok(AccuracyMatrix {
            grouping: grouping.to_string(),
            groups,
            cells,
            train_scene_counts,
            validation_scene_counts,
            std_convention: "population",
            scenes,
        })
    }

    pub fn size(&self) -> usize {
        self.groups.len()
    }

    pub fn cell(&self, train: usize, eval: usize) -> &MatrixCell {
        &self.cells[train * self.size() + eval]
    }

    pub fn diagonal_mean(&self) -> f64 {
        let n = self.size();
        (0..n).map(|i| self.cell(i, i).mean).sum::<f64>() / n as f64
    }

    /// Mean over off-diagonal cell means; NaN for a 1×1 matrix.
    pub fn off_diagonal_mean(&self) -> f64 {
        let n = self.size();
        let off: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.cell(i, j).mean)
            .collect();
        off.iter().sum::<f64>() / off.len() as f64
    }

    /// Rows are train groups, columns eval groups; cells read `mean±std (n)`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        let mut header = vec!["train\\eval".to_string()];
        header.extend(self.groups.iter().cloned());
        w.write_record(&header)?;
        for (i, g) in self.groups.iter().enumerate() {
            let mut row = vec![g.clone()];
            for j in 0..self.size() {
                let c = self.cell(i, j);
                row.push(format!("{}±{} ({})", fmt_f64(c.mean), fmt_f64(c.std), c.n));
            }
            w.write_record(&row)?;
        }
        finish_csv(w)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        to_json_bytes(self)
    }

    /// `train_group,eval_group,scene_id,correct,total,accuracy`
    pub fn scenes_to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv_writer();
        w.write_record(["train_group", "eval_group", "scene_id", "correct", "total", "accuracy"])?;
        for r in &self.scenes {
            w.write_record([
                r.train_group.clone(),
                r.eval_group.clone(),
                r.scene_id.clone(),
                r.correct.to_string(),
                r.total.to_string(),
                fmt_f64(r.accuracy),
            ])?;
        }
        finish_csv(w)
    }
}
