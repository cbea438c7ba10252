use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoshift::eval::TrainConfig;
use geoshift::kmeans::{DEFAULT_K, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL};
use geoshift::stats::{DEFAULT_GRID_POINTS, DEFAULT_STRIDE};
use geoshift::{Grouping, Region};

#[derive(Debug, Parser)]
#[command(
    name = "geoshift",
    version,
    about = "Distribution-shift diagnostics for multispectral land-use patches"
)]
pub struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true, env = "GEOSHIFT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DtypeArg {
    U16,
    F32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scene and patch counts per region and season.
    Summarize {
        #[arg(long)]
        manifest: PathBuf,
        /// Also write the table as a file here.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Write a built-in dataset.
    #[command(subcommand)]
    Fixture(FixtureCommand),
    /// Band summaries and per-group band density curves.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        /// Use every n-th pixel of each patch.
        #[arg(long, default_value_t = DEFAULT_STRIDE)]
        stride: usize,
        /// Density evaluation points per curve.
        #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
        grid: usize,
        #[arg(long)]
        group_by: Option<Grouping>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Fit the landscape K-Means model on per-patch band means.
    Cluster {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent runs; the lowest inertia wins.
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// Representative patches listed per cluster.
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iter: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Compare groups through their cluster mixtures.
    Shift(ShiftArgs),
    /// Train one baseline classifier per group and fill the cross-group accuracy matrix.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// Metadata-only manifest with the SEN12MS scene and patch inventory.
    Sen12ms {
        #[arg(long)]
        output: PathBuf,
    },
    /// Synthetic two-class dataset whose class signature moves between bands per region.
    Shift {
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "africa,europe")]
        regions: Vec<Region>,
        #[arg(long, default_value_t = 6)]
        scenes: usize,
        #[arg(long, default_value_t = 20)]
        patches: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "u16")]
        dtype: DtypeArg,
    },
}

#[derive(Debug, Args)]
pub struct ShiftArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// `patch_id,cluster,distance` as written by `cluster`.
    #[arg(long)]
    pub assignments: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value = "continent")]
    pub group_by: Grouping,
    /// Fitted cluster model; supplies K and is required for --coverage.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of clusters when no model is given.
    #[arg(long)]
    pub k: Option<usize>,
    /// Embed the normalized group histograms in two principal components.
    #[arg(long)]
    pub pca: bool,
    /// Write the group-given-cluster probability table.
    #[arg(long)]
    pub pcond: bool,
    /// Use plain Bayes P(g|c) instead of the imbalance-corrected table.
    #[arg(long)]
    pub bayes: bool,
    /// Manifest of new patches to score against a training group.
    #[arg(long, value_name = "NEW_MANIFEST")]
    pub coverage: Option<PathBuf>,
    #[arg(long)]
    pub training_group: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
    #[arg(long, default_value = "continent")]
    pub group_by: Grouping,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Replace trained models with the labels themselves.
    #[arg(long, hide = true)]
    pub oracle_predictor: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub early_stopping_patience: Option<usize>,
    #[arg(long)]
    pub plateau_factor: Option<f64>,
    #[arg(long)]
    pub plateau_patience: Option<usize>,
    #[arg(long)]
    pub min_learning_rate: Option<f64>,
}

impl TrainArgs {
    pub fn to_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            max_epochs: self.max_epochs.unwrap_or(d.max_epochs),
            early_stopping_patience: self.early_stopping_patience.unwrap_or(d.early_stopping_patience),
            plateau_factor: self.plateau_factor.unwrap_or(d.plateau_factor),
            plateau_patience: self.plateau_patience.unwrap_or(d.plateau_patience),
            min_learning_rate: self.min_learning_rate.unwrap_or(d.min_learning_rate),
            ..d
        }
    }
}
