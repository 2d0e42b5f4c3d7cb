use std::net::{IpAddr, Ipv4Addr};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heterarch::{Backend, RecognitionConfig, SelectionMetric};

pub const MODEL_DIR_ENV: &str = "HETERARCH_MODEL_DIR";
pub const DEFAULT_PORT: u16 = 7878;

#[derive(Debug, Parser)]
#[command(name = "heterarch", version, about = "Weighted N-gram dictionaries for cognitive distortion recognition")]
pub struct Cli {
    /// Log verbosity (repeat for more)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn dictionaries from a labeled dataset and save them
    Train(TrainArgs),
    /// Score texts, one per input line (or the whole input with --document)
    Recognize(RecognizeArgs),
    /// Render matched spans in color (terminal) or as HTML
    Highlight(HighlightArgs),
    /// Run the three-split protocol for one configuration
    Evaluate(EvaluateArgs),
    /// Sweep hyper-parameters and write grid tables
    Grid(GridArgs),
    /// Serve the local audit API
    Serve(ServeArgs),
    /// Print per-class corpus statistics
    Stats(StatsArgs),
    /// Compare two saved models
    Diff(DiffArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Delimited dataset file
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub dataset: Option<PathBuf>,
    /// Column map (`key=value` lines); defaults to the dataset path with a `.columns` extension
    #[arg(long)]
    pub columns: Option<PathBuf>,
    /// Use a generated corpus of this many texts instead of a dataset
    #[arg(long, value_name = "TEXTS")]
    pub synthetic: Option<usize>,
    /// Seed of the generated corpus
    #[arg(long, default_value_t = 7, requires = "synthetic")]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct LearnArgs {
    /// Maximum N-gram order (NM)
    #[arg(long = "nm", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=5))]
    pub order: u64,
    /// Selection metric (SM)
    #[arg(long = "sm", default_value = "FCR", value_parser = parse_metric)]
    pub metric: SelectionMetric,
    /// Inclusion threshold in percent (IT)
    #[arg(long = "it", default_value_t = 0, value_parser = clap::value_parser!(u32).range(0..100))]
    pub inclusion_threshold: u32,
}

#[derive(Debug, Clone, Args)]
pub struct RecognitionArgs {
    /// Detection threshold in percent (DT)
    #[arg(long = "dt", default_value_t = 50.0, value_parser = parse_percent)]
    pub detection_threshold: f64,
    /// Count every match as its order instead of order times weight
    #[arg(long)]
    pub unweighted: bool,
    /// Use linear scores instead of log scaling
    #[arg(long)]
    pub no_log_scaling: bool,
    /// Let N-grams span sentence boundaries
    #[arg(long)]
    pub cross_sentence: bool,
}

impl RecognitionArgs {
    pub fn config(&self) -> RecognitionConfig {
        RecognitionConfig {
            detection_threshold: self.detection_threshold,
            log_scaling: !self.no_log_scaling,
            weighted: !self.unweighted,
            cross_sentence: self.cross_sentence,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelDirArg {
    /// Saved model directory
    #[arg(long = "model", env = MODEL_DIR_ENV)]
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Input file; `-` or absent reads stdin
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Treat the whole input as one text instead of one text per line
    #[arg(long)]
    pub document: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub learn: LearnArgs,
    /// Output model directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    #[command(flatten)]
    pub model: ModelDirArg,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub rec: RecognitionArgs,
    #[arg(long, default_value = "naive", value_parser = parse_backend)]
    pub backend: Backend,
    /// One JSON object per text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Ansi,
    Html,
    Json,
}

#[derive(Debug, Args)]
pub struct HighlightArgs {
    #[command(flatten)]
    pub model: ModelDirArg,
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub rec: RecognitionArgs,
    #[arg(long, value_enum, default_value_t = Format::Ansi)]
    pub format: Format,
    /// Append a legend of detected classes and their scores
    #[arg(long)]
    pub legend: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub learn: LearnArgs,
    #[command(flatten)]
    pub rec: RecognitionArgs,
    #[arg(long, default_value = "naive", value_parser = parse_backend)]
    pub backend: Backend,
    /// Print the full report as JSON
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightModes {
    Both,
    Weighted,
    Unweighted,
}

impl WeightModes {
    pub fn values(self) -> Vec<bool> {
        match self {
            WeightModes::Both => vec![false, true],
            WeightModes::Weighted => vec![true],
            WeightModes::Unweighted => vec![false],
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// NM values (default 1..=5)
    #[arg(long = "nm", value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..=5))]
    pub orders: Vec<u64>,
    /// Selection metrics (default all nine)
    #[arg(long = "sm", value_delimiter = ',', value_parser = parse_metric)]
    pub metrics: Vec<SelectionMetric>,
    /// IT values in percent (default 0,10,..,90)
    #[arg(long = "it", value_delimiter = ',', value_parser = clap::value_parser!(u32).range(0..100))]
    pub inclusion_thresholds: Vec<u32>,
    /// DT values in percent (default 10,20,..,90)
    #[arg(long = "dt", value_delimiter = ',', value_parser = clap::value_parser!(u32).range(0..=100))]
    pub detection_thresholds: Vec<u32>,
    #[arg(long, value_enum, default_value_t = WeightModes::Both)]
    pub weighted: WeightModes,
    #[arg(long)]
    pub no_log_scaling: bool,
    #[arg(long)]
    pub cross_sentence: bool,
    /// Output directory for the grid tables and summaries
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Model directory to load at start; the API can also load one later
    #[arg(long = "model", env = MODEL_DIR_ENV)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    /// Permit binding a non-loopback address
    #[arg(long)]
    pub allow_remote: bool,
    #[arg(long, default_value = "naive", value_parser = parse_backend)]
    pub backend: Backend,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long = "nm", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=5))]
    pub order: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    pub from: PathBuf,
    pub to: PathBuf,
    #[arg(long)]
    pub json: bool,
}

fn parse_metric(s: &str) -> Result<SelectionMetric, String> {
    s.parse().map_err(|e: heterarch::Error| e.to_string())
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse()
}

fn parse_percent(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside 0..=100"))
    }
}
