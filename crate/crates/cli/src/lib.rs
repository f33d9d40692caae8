//! Command-line front end for feature-leveling networks.

mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leveling::reports::HeatmapFormat;
use leveling::{MetricKind, Mode};

pub use config::{DataSource, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "leveling", version, about = "Train, prune and inspect feature-leveling networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an IXOR dataset as CSV.
    GenIxor(GenIxorArgs),
    /// Train a network from a config file.
    Train(TrainArgs),
    /// Print a model's metric on a dataset as JSON.
    Eval(EvalArgs),
    /// Remove zero gates and write the pruned model.
    Prune(PruneArgs),
    /// Write the per-level routing and weight report as JSON.
    Report(ReportArgs),
    /// Export a weight matrix as PGM or CSV.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct GenIxorArgs {
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// All rows, or the training part when `--test-out` is given.
    #[arg(long)]
    pub out: PathBuf,
    /// Splits 4:1 and writes the smaller part here.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Config file, or the name of a shipped config (ixor, mnist,
    /// cal-housing, cifar-cat-deer).
    #[arg(long, default_value = "ixor")]
    pub config: String,
    /// Base for relative dataset paths. Defaults to $LEVELING_DATA_DIR,
    /// then the config file's directory.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Proposed,
    Baseline,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Proposed => Mode::Proposed,
            ModeArg::Baseline => Mode::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    Rmse,
    Auc,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Accuracy => MetricKind::Accuracy,
            MetricArg::Rmse => MetricKind::Rmse,
            MetricArg::Auc => MetricKind::Auc,
        }
    }
}

/// Where evaluation rows come from: a table CSV, or the test split of the
/// config embedded in the model.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Table CSV (last column `label`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Also printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `head` for the GLM weights, or a 1-based hidden layer index.
    #[arg(long, default_value = "1")]
    pub weights: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "pgm")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Pgm,
    Csv,
}

impl From<FormatArg> for HeatmapFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Pgm => HeatmapFormat::Pgm,
            FormatArg::Csv => HeatmapFormat::Csv,
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Output goes to stdout, diagnostics to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { error::EXIT_USAGE } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match commands::dispatch(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
