use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use soforest::data::LabelColumn;
use soforest::split::Binning;
use soforest::{Breakeven, SplitMode};

#[derive(Debug, Parser)]
#[command(name = "soforest", version, about = "Sparse oblique random forests")]
pub struct Cli {
    /// Log progress messages (warnings are always shown).
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a forest and write it to a model file.
    Train(TrainArgs),
    /// Predict classes for a dataset with a saved model.
    Predict(PredictArgs),
    /// Measure the node size where histogram splitting starts to win.
    Calibrate(CalibrateArgs),
    /// Run an instrumented benchmark and print its CSV table.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Exact,
    Hist,
    Dynamic,
}

impl From<Mode> for SplitMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => SplitMode::ExactOnly,
            Mode::Hist => SplitMode::HistogramOnly,
            Mode::Dynamic => SplitMode::Dynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BinningArg {
    TwoLevel,
    Scalar,
}

impl From<BinningArg> for Binning {
    fn from(b: BinningArg) -> Self {
        match b {
            BinningArg::TwoLevel => Binning::TwoLevel,
            BinningArg::Scalar => Binning::Scalar,
        }
    }
}

/// How to read a dataset file.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file.
    #[arg(long)]
    pub data: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// CSV label column: `last`, a 0-based index, or a header name.
    #[arg(long, default_value = "last")]
    pub label: LabelColumn,

    /// The CSV file has no header row.
    #[arg(long)]
    pub no_header: bool,

    /// Feature count of a libsvm file; required by `train`, `predict` uses the model's.
    #[arg(long)]
    pub features: Option<usize>,

    /// Value precision.
    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    /// Number of trees.
    #[arg(long, default_value_t = 240)]
    pub trees: usize,

    /// Histogram bins per node.
    #[arg(long, default_value_t = 256)]
    pub bins: usize,

    /// Bin lookup used to fill histograms.
    #[arg(long, value_enum, default_value_t = BinningArg::TwoLevel)]
    pub binning: BinningArg,

    /// Split search: sorting, histograms, or chosen per node.
    #[arg(long, value_enum, default_value_t = Mode::Dynamic)]
    pub mode: Mode,

    /// Node size above which dynamic mode uses histograms: `auto` or a number.
    #[arg(long, default_value = "auto")]
    pub breakeven: Breakeven,

    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Fraction of rows sampled without replacement for each tree.
    #[arg(long, default_value_t = 0.632)]
    pub bootstrap: f64,

    /// Depth limit [default: grow to purity].
    #[arg(long)]
    pub max_depth: Option<usize>,

    /// Nodes with fewer samples become leaves.
    #[arg(long, default_value_t = 2)]
    pub min_samples: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub forest: ForestArgs,

    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,

    #[command(flatten)]
    pub data: DataArgs,

    /// The CSV file has no label column.
    #[arg(long)]
    pub unlabeled: bool,

    /// Add one vote-fraction column per class.
    #[arg(long)]
    pub votes: bool,

    /// Predictions CSV [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Time budget in milliseconds.
    #[arg(long, default_value_t = 100)]
    pub budget_ms: u64,

    #[arg(long, default_value_t = 256)]
    pub bins: usize,

    #[arg(long, value_enum, default_value_t = BinningArg::TwoLevel)]
    pub binning: BinningArg,

    /// Smallest node size probed.
    #[arg(long, default_value_t = 64)]
    pub n_min: usize,

    /// Largest node size probed.
    #[arg(long, default_value_t = 65_536)]
    pub n_max: usize,

    #[arg(long, value_enum, default_value_t = Precision::F32)]
    pub precision: Precision,

    /// Write every probe as `n,exact_seconds,histogram_seconds` CSV.
    #[arg(long)]
    pub samples_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchKind {
    /// Per-depth split time under exact, histogram and dynamic splitting.
    Depth,
    /// Per-phase time of histogram splitting by depth bucket.
    Phase,
    /// Phase profiles under scalar and two-level binning.
    Binning,
    /// End-to-end training time of each mode, relative to exact.
    Modes,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchKind::Modes)]
    pub kind: BenchKind,

    /// CSV dataset to use instead of generated Trunk data.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Trunk rows.
    #[arg(long, default_value_t = soforest_bench::DEFAULT_SAMPLES)]
    pub samples: usize,

    /// Trunk features.
    #[arg(long, default_value_t = soforest_bench::DEFAULT_FEATURES)]
    pub features: usize,

    #[command(flatten)]
    pub forest: ForestArgs,

    /// CSV output [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DataKind {
    Trunk,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum, default_value_t = DataKind::Trunk)]
    pub kind: DataKind,

    /// Rows; must be even.
    #[arg(long)]
    pub samples: usize,

    #[arg(long)]
    pub features: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// CSV file to write.
    #[arg(long)]
    pub out: PathBuf,
}
