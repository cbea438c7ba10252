//! Per-pixel multinomial logistic regression, trained with mini-batch Adam on
//! categorical cross-entropy. Stands in for a segmentation network so the
//! cross-group harness can run end to end on a desk.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::BAND_COUNT;
use crate::error::{Error, Result};
use crate::eval::accuracy::Classifier;
use crate::labels::CLASS_COUNT;
use crate::manifest::ManifestEntry;
use crate::patch::{ClassGrid, Patch, PATCH_PIXELS, PATCH_SIZE};
use crate::patch_io::PatchSource;
use crate::seed::rng;

/// Inputs are reflectance divided by this constant.
pub const FEATURE_SCALE: f64 = 10_000.0;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    #[default]
    CategoricalCrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Patches per mini-batch.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub early_stopping_patience: usize,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub min_learning_rate: f64,
    pub seed: u64,
    pub loss: Loss,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 4,
            max_epochs: 20,
            early_stopping_patience: 5,
            plateau_factor: 0.5,
            plateau_patience: 3,
            min_learning_rate: 1e-6,
            seed: 0,
            loss: Loss::CategoricalCrossEntropy,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be at least 1".into()));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "plateau factor must be in (0, 1], got {}",
                self.plateau_factor
            )));
        }
        Ok(())
    }
}

/// Weights (`CLASS_COUNT × BAND_COUNT`) and biases of the softmax model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxParams {
    pub weights: [[f64; BAND_COUNT]; CLASS_COUNT],
    pub biases: [f64; CLASS_COUNT],
}

impl Default for SoftmaxParams {
    fn default() -> Self {
        SoftmaxParams {
            weights: [[0.0; BAND_COUNT]; CLASS_COUNT],
            biases: [0.0; CLASS_COUNT],
        }
    }
}

impl SoftmaxParams {
    fn add_assign(&mut self, other: &SoftmaxParams) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.biases.iter_mut().zip(&other.biases).for_each(|(x, y)| *x += y);
    }

    fn scale(&mut self, s: f64) {
        self.weights.iter_mut().flatten().for_each(|x| *x *= s);
        self.biases.iter_mut().for_each(|x| *x *= s);
    }

    fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().flatten().chain(self.biases.iter_mut())
    }

    fn flat(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter())
    }

    /// Softmax probabilities for one scaled feature vector.
    pub fn probabilities(&self, x: &[f64; BAND_COUNT]) -> [f64; CLASS_COUNT] {
        let mut logits = self.biases;
        for (l, w) in logits.iter_mut().zip(&self.weights) {
            *l += w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for l in logits.iter_mut() {
            *l = (*l - max).exp();
            total += *l;
        }
        logits.iter_mut().for_each(|l| *l /= total);
        logits
    }

    /// Adds the cross-entropy gradient of one pixel into `grad`; returns its loss.
    fn accumulate(&self, x: &[f64; BAND_COUNT], label: u8, grad: &mut SoftmaxParams) -> f64 {
        let p = self.probabilities(x);
        for (c, pc) in p.iter().enumerate() {
            let delta = pc - if c == label as usize { 1.0 } else { 0.0 };
            grad.biases[c] += delta;
            grad.weights[c].iter_mut().zip(x).for_each(|(g, xi)| *g += delta * xi);
        }
        -p[label as usize].max(f64::MIN_POSITIVE).ln()
    }
}

/// Mean cross-entropy over labeled feature vectors and its analytic gradient.
pub fn loss_and_gradient(params: &SoftmaxParams, pixels: &[([f64; BAND_COUNT], u8)]) -> (f64, SoftmaxParams) {
    let mut grad = SoftmaxParams::default();
    let mut loss = 0.0;
    for (x, y) in pixels {
        loss += params.accumulate(x, *y, &mut grad);
    }
    let n = pixels.len().max(1) as f64;
    grad.scale(1.0 / n);
    (loss / n, grad)
}

/// Scaled feature vector of pixel `i`.
pub fn pixel_features(patch: &Patch, i: usize) -> [f64; BAND_COUNT] {
    let image = patch.image();
    std::array::from_fn(|b| f64::from(image[b * PATCH_PIXELS + i]) / FEATURE_SCALE)
}

struct Partial {
    loss: f64,
    grad: SoftmaxParams,
    pixels: u64,
}

fn patch_partial(params: &SoftmaxParams, patch: &Patch, with_grad: bool) -> Partial {
    let labels = patch.labels().cells();
    let mut grad = SoftmaxParams::default();
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let x = pixel_features(patch, i);
        if with_grad {
            loss += params.accumulate(&x, y, &mut grad);
        } else {
            loss -= params.probabilities(&x)[y as usize].max(f64::MIN_POSITIVE).ln();
        }
    }
    Partial {
        loss,
        grad,
        pixels: labels.len() as u64,
    }
}

/// Loads and scores each entry in parallel, then sums in entry order.
fn sum_partials(
    params: &SoftmaxParams,
    source: &dyn PatchSource,
    entries: &[&ManifestEntry],
    with_grad: bool,
) -> Result<Partial> {
    let partials: Vec<Partial> = entries
        .par_iter()
        .map(|e| Ok(patch_partial(params, &source.load(e)?, with_grad)))
        .collect::<Result<_>>()?;
    let mut total = Partial {
        loss: 0.0,
        grad: SoftmaxParams::default(),
        pixels: 0,
    };
    for p in partials {
        total.loss += p.loss;
        total.grad.add_assign(&p.grad);
        total.pixels += p.pixels;
    }
    Ok(total)
}

/// Mean per-pixel cross-entropy over the given patches.
pub fn mean_loss(params: &SoftmaxParams, source: &dyn PatchSource, entries: &[&ManifestEntry]) -> Result<f64> {
    let total = sum_partials(params, source, entries, false)?;
    if total.pixels == 0 {
        return Err(Error::EmptyInput("no pixels to score"));
    }
    Ok(total.loss / total.pixels as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: Option<f64>,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub params: SoftmaxParams,
    pub feature_scale: f64,
    pub config: TrainConfig,
    pub training_log: Vec<EpochLog>,
    /// Best monitored loss, i.e. the loss of the returned parameters.
    pub final_validation_loss: Option<f64>,
}

impl BaselineModel {
    /// All-zero parameters: uniform probabilities everywhere.
    pub fn zeros() -> Self {
        Self::from_params(SoftmaxParams::default())
    }

    pub fn from_params(params: SoftmaxParams) -> Self {
        BaselineModel {
            params,
            feature_scale: FEATURE_SCALE,
            config: TrainConfig::default(),
            training_log: Vec::new(),
            final_validation_loss: None,
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        crate::export::to_json_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new() -> Self {
        let n = CLASS_COUNT * (BAND_COUNT + 1);
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut SoftmaxParams, grad: &SoftmaxParams, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for (((p, g), m), v) in params
            .flat_mut()
            .zip(grad.flat())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}

/// Mini-batch training from zero-initialized parameters. Patch order is
/// reshuffled every epoch from `config.seed`. The learning rate halves (by
/// `plateau_factor`) after `plateau_patience` epochs without improvement, and
/// training stops after `early_stopping_patience` such epochs; the parameters
/// with the lowest monitored loss are returned. The monitored loss is the
/// validation loss, or the training loss when no validation patches are given.
pub fn train_baseline(
    source: &dyn PatchSource,
    train: &[&ManifestEntry],
    validation: &[&ManifestEntry],
    config: &TrainConfig,
) -> Result<BaselineModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyInput("no training patches"));
    }
    let mut params = SoftmaxParams::default();
    let mut adam = Adam::new();
    let mut shuffler = rng(config.seed);
    let mut order: Vec<&ManifestEntry> = train.to_vec();
    let mut lr = config.learning_rate;
    let mut log = Vec::new();

    let mut best = (f64::INFINITY, params);
    let mut stale_epochs = 0;
    let mut plateau_best = f64::INFINITY;
    let mut plateau_wait = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffler);
        let mut loss_sum = 0.0;
        let mut pixel_sum = 0u64;
        for batch in order.chunks(config.batch_size) {
            let mut total = sum_partials(&params, source, batch, true)?;
            if !total.loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    loss: total.loss,
                });
            }
            total.grad.scale(1.0 / total.pixels as f64);
            adam.step(&mut params, &total.grad, lr);
            loss_sum += total.loss;
            pixel_sum += total.pixels;
        }
        let train_loss = loss_sum / pixel_sum as f64;
        let validation_loss = if validation.is_empty() {
            None
        } else {
            Some(mean_loss(&params, source, validation)?)
        };
        let monitored = validation_loss.unwrap_or(train_loss);
        if !monitored.is_finite() || params.flat().any(|p| !p.is_finite()) {
            return Err(Error::Divergence { epoch, loss: monitored });
        }
        log.push(EpochLog {
            epoch,
            train_loss,
            validation_loss,
            learning_rate: lr,
        });

        if monitored < plateau_best {
            plateau_best = monitored;
            plateau_wait = 0;
        } else {
            plateau_wait += 1;
            if plateau_wait >= config.plateau_patience {
                lr = (lr * config.plateau_factor).max(config.min_learning_rate);
                plateau_wait = 0;
            }
        }
        if monitored < best.0 {
            best = (monitored, params);
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.early_stopping_patience {
                break;
            }
        }
    }

    Ok(BaselineModel {
        params: best.1,
        feature_scale: FEATURE_SCALE,
        config: config.clone(),
        training_log: log,
        final_validation_loss: best.0.is_finite().then_some(best.0),
    })
}

/// Per-pixel class probabilities, pixel-major: `values[pixel * CLASS_COUNT + class]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    pub values: Vec<f64>,
}

impl ProbabilityField {
    pub fn pixel(&self, i: usize) -> &[f64] {
        &self.values[i * CLASS_COUNT..(i + 1) * CLASS_COUNT]
    }
}

fn argmax(p: &[f64]) -> u8 {
    let mut best = 0;
    for (c, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = c;
        }
    }
    best as u8
}

/// Argmax class grid (ties to the lowest class) and the full probability field.
pub fn predict_baseline(model: &BaselineModel, patch: &Patch) -> (ClassGrid, ProbabilityField) {
    let mut classes = Vec::with_capacity(PATCH_PIXELS);
    let mut values = Vec::with_capacity(PATCH_PIXELS * CLASS_COUNT);
    for i in 0..PATCH_PIXELS {
        let p = model.params.probabilities(&pixel_features(patch, i));
        classes.push(argmax(&p));
        values.extend_from_slice(&p);
    }
    let grid = ClassGrid::new(PATCH_SIZE, PATCH_SIZE, classes).expect("argmax is a class index");
    (grid, ProbabilityField { values })
}

impl Classifier for BaselineModel {
    fn predict(&self, patch: &Patch) -> Result<ClassGrid> {
        let classes = (0..PATCH_PIXELS)
            .map(|i| argmax(&self.params.probabilities(&pixel_features(patch, i))))
            .collect();
        ClassGrid::new(PATCH_SIZE, PATCH_SIZE, classes)
    }
}
