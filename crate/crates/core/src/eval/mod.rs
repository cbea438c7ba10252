//! Overall-accuracy evaluation and the cross-group experiment built on the
//! baseline classifier.

pub mod accuracy;
pub mod baseline;
pub mod experiment;
pub mod split;

pub use accuracy::{
    pixel_accuracy, scene_accuracy, AccuracyMatrix, CellStats, Classifier, LabelsOracle, MatrixCell, PixelAccuracy,
    SceneAccuracy, SceneRecord,
};
pub use baseline::{
    loss_and_gradient, predict_baseline, train_baseline, BaselineModel, EpochLog, ProbabilityField, SoftmaxParams,
    TrainConfig,
};
pub use experiment::{cross_group_experiment, cross_group_experiment_with, ExperimentOutcome, FitInput};
pub use split::{split_scenes, validation_count, SceneSplit, DEFAULT_VAL_FRACTION};
