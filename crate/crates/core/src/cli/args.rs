use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use fallsense::classify::ClassifierFamily;
use fallsense::data::{BodyLocation, FallKind};
use fallsense::signal::CoordinateSystem;

#[derive(Debug, Parser)]
#[command(
    name = "fallsense",
    version,
    about = "Fall detection and prior-fall activity identification"
)]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// `key=value` file supplying flags not given on the command line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory for reports and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FALLSENSE_WORKERS")]
    pub workers: Option<usize>,

    /// Log more (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and a matching scenario file.
    Synth(SynthArgs),
    /// Load, remap and validate a dataset; write it in canonical form.
    Ingest(IngestArgs),
    /// Window a dataset and write one feature row per window.
    Features(FeaturesArgs),
    /// Train one classifier and save the model.
    Train(TrainArgs),
    /// Randomized hyperparameter search with k-fold cross-validation.
    Search(SearchArgs),
    /// Accuracy grid over locations, coordinate systems and classifiers.
    EvalActivity(EvalActivityArgs),
    /// Calibrate all fall detectors on a whole dataset.
    CalibrateFall(CalibrateArgs),
    /// Calibrate and compare the three fall detectors.
    EvalFall(EvalFallArgs),
    /// Replay one recording through the device simulator.
    Simulate(SimulateArgs),
    /// Run the alert server.
    Serve(ServeArgs),
    /// Replay prior-fall scenarios through device and server.
    EvalPrior(EvalPriorArgs),
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Dataset file.
    #[arg(
        long,
        value_name = "CSV",
        required_unless_present = "synthetic",
        conflicts_with = "synthetic"
    )]
    pub data: Option<PathBuf>,

    /// Name remapping file applied while loading.
    #[arg(long, value_name = "FILE")]
    pub remap: Option<PathBuf>,

    /// Gap (seconds) that splits a session into separate recordings.
    #[arg(long, default_value_t = 0.5)]
    pub session_gap_s: f64,

    /// Use the seeded synthetic corpus instead of a file.
    #[arg(long)]
    pub synthetic: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 8)]
    pub subjects: usize,
    #[arg(long, default_value_t = 3)]
    pub sessions: usize,
    #[arg(long, default_value_t = 12.0)]
    pub activity_s: f64,
    #[arg(long, default_value_t = 8)]
    pub falls_per_subject: usize,
    #[arg(long, default_value_t = 5)]
    pub knee_falls_per_subject: usize,
    /// Locations to generate (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub locations: Vec<BodyLocation>,
    /// Scenarios per activity in the generated scenario file.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Restrict to one location.
    #[arg(long)]
    pub location: Option<BodyLocation>,
    #[arg(long, default_value = "CARTESIAN")]
    pub coords: CoordinateSystem,
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "LEFT_CHEST")]
    pub location: BodyLocation,
    #[arg(long, default_value = "CARTESIAN")]
    pub coords: CoordinateSystem,
    #[arg(long, default_value = "GBT")]
    pub family: ClassifierFamily,
    /// Hyperparameter override, `name=value` (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "LEFT_CHEST")]
    pub location: BodyLocation,
    #[arg(long, default_value = "CARTESIAN")]
    pub coords: CoordinateSystem,
    #[arg(long, default_value = "GBT")]
    pub family: ClassifierFamily,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct EvalActivityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Locations (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub locations: Vec<BodyLocation>,
    /// Random-search draws per cell; 0 uses family defaults.
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.7)]
    pub train_ratio: f64,
    #[arg(long, default_value_t = 50)]
    pub stride: usize,
}

#[derive(Debug, Args)]
pub struct FallArgs {
    #[arg(long, default_value = "LEFT_CHEST")]
    pub location: BodyLocation,
    /// Random non-fall segments drawn from activity recordings.
    #[arg(long, default_value_t = 1000)]
    pub nonfalls: usize,
    #[arg(long, default_value_t = 200)]
    pub segment_len: usize,
    /// Clusters for the DTW threshold.
    #[arg(long, default_value_t = 3)]
    pub dtw_clusters: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fall: FallArgs,
}

#[derive(Debug, Args)]
pub struct EvalFallArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fall: FallArgs,
    /// Share of falls and non-falls used for calibration.
    #[arg(long, default_value_t = 0.7)]
    pub holdout: f64,
    /// Calibrate and evaluate on the same data.
    #[arg(long)]
    pub no_holdout: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `synthetic:<LABEL>:<seconds>` or `dataset:<recording id>`.
    #[arg(long)]
    pub recording: String,
    /// Dataset holding `dataset:` recordings.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub remap: Option<PathBuf>,
    /// Cut the recording here and append a fall.
    #[arg(long)]
    pub inject_at_s: Option<f64>,
    #[arg(long, default_value = "FALL")]
    pub fall_kind: FallKind,
    /// Detector calibration file (default parameters without it).
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
    #[arg(long, env = "FALLSENSE_SERVER", default_value = "127.0.0.1:7878")]
    pub server: String,
    /// Write payloads to this file instead of sending them.
    #[arg(long, value_name = "FILE")]
    pub dry_run: Option<PathBuf>,
    /// Replay speed multiplier; 0 is unpaced.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
    #[arg(long, default_value = "device-1")]
    pub device_id: String,
    #[arg(long, default_value_t = 5)]
    pub retries: u32,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, env = "FALLSENSE_BIND", default_value = "127.0.0.1:7878")]
    pub bind: String,
    /// `stdout`, `null` or `webhook:<http url>`.
    #[arg(long, default_value = "stdout")]
    pub sink: String,
    /// Append-only audit log.
    #[arg(long, value_name = "FILE")]
    pub audit_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalPriorArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub calibration: Option<PathBuf>,
    /// Scenario file (default: generated synthetic scenarios).
    #[arg(long, value_name = "FILE")]
    pub scenarios: Option<PathBuf>,
    /// Generated scenarios per activity.
    #[arg(long, default_value_t = 8)]
    pub trials: usize,
    /// Dataset holding `dataset:` recordings.
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub remap: Option<PathBuf>,
}
