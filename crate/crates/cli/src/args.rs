use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use concord_core::cluster::{BinScheme, CentroidTies, KMeansAlgorithm};
use concord_core::{ColumnMap, FrequencyContrast, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "concord",
    version,
    about = "Concordance probabilities for frequency and severity models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Global exposure-matched concordance of a frequency model.
    Freq(FreqArgs),
    /// Local frequency concordance over an exposure grid.
    FreqCurve(FreqCurveArgs),
    /// Severity concordance at one size threshold.
    Sev(SevArgs),
    /// Severity concordance over a grid of size thresholds.
    SevCurve(SevCurveArgs),
    /// Estimates and timings over a grid of engine settings.
    Bench(BenchArgs),
    /// Write a seeded synthetic dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Sample,
    Kmeans,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Lloyd,
    Optimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BinningArg {
    Quantile,
    EqualWidth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    PoissonWorld,
    GammaWorld,
    Separable,
    DegenerateTies,
}

impl From<AlgorithmArg> for KMeansAlgorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Lloyd => KMeansAlgorithm::Lloyd,
            AlgorithmArg::Optimal => KMeansAlgorithm::Optimal,
        }
    }
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::PoissonWorld => Scenario::PoissonWorld,
            ScenarioArg::GammaWorld => Scenario::GammaWorld,
            ScenarioArg::Separable => Scenario::Separable,
            ScenarioArg::DegenerateTies => Scenario::DegenerateTies,
        }
    }
}

fn parse_contrast(s: &str) -> Result<FrequencyContrast, String> {
    s.parse()
        .map_err(|_| format!("expected one of 01+, 02+, 12+, got `{s}`"))
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "claim_count")]
    pub claim_count_col: String,
    #[arg(long, default_value = "exposure")]
    pub exposure_col: String,
    #[arg(long, default_value = "prediction")]
    pub prediction_col: String,
    #[arg(long, default_value = "claim_size")]
    pub claim_size_col: String,
}

impl InputArgs {
    pub fn columns(&self) -> ColumnMap {
        ColumnMap {
            claim_count: self.claim_count_col.clone(),
            exposure: self.exposure_col.clone(),
            prediction: self.prediction_col.clone(),
            claim_size: self.claim_size_col.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}

/// Settings shared by the sampled and k-means engines.
#[derive(Debug, Args)]
pub struct EngineArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Sample)]
    pub method: MethodArg,
    /// Number of sampled index observations (default 20000 for frequency,
    /// 5000 for severity).
    #[arg(long = "S")]
    pub sample_size: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Clusters per group.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    /// Exposure splits.
    #[arg(long, default_value_t = 15)]
    pub bins: usize,
    #[arg(long, default_value_t = 1)]
    pub reruns: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Lloyd)]
    pub algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value_t = BinningArg::Quantile)]
    pub binning: BinningArg,
    /// Tied centroids count half instead of nothing.
    #[arg(long)]
    pub half_credit: bool,
}

impl EngineArgs {
    pub fn binning(&self) -> BinScheme {
        match self.binning {
            BinningArg::Quantile => BinScheme::Quantile,
            BinningArg::EqualWidth => BinScheme::EqualWidth,
        }
    }

    pub fn ties(&self) -> CentroidTies {
        if self.half_credit {
            CentroidTies::HalfCredit
        } else {
            CentroidTies::Strict
        }
    }
}

#[derive(Debug, Args)]
pub struct FreqArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "01+", value_parser = parse_contrast)]
    pub contrast: FrequencyContrast,
    /// Maximum exposure difference of a comparable pair.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FreqCurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "01+", value_parser = parse_contrast)]
    pub contrast: FrequencyContrast,
    /// Exposure grid, comma separated (default 0.05, 0.10, ..., 1.00).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Half-width of the exposure window around each grid point.
    #[arg(long, default_value_t = 0.05)]
    pub window: f64,
    #[arg(long, default_value_t = 100)]
    pub min_pairs: u64,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SevArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Minimum claim-size difference of a comparable pair.
    #[arg(long, default_value_t = 0.0)]
    pub v: f64,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SevCurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Threshold grid, comma separated (default: deciles of sampled
    /// claim-size differences).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "01+", value_parser = parse_contrast)]
    pub contrast: FrequencyContrast,
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "sample,kmeans"
    )]
    pub methods: Vec<MethodArg>,
    #[arg(long = "S", default_value_t = 20_000)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "10,19,50")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "8,15,70")]
    pub bins: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub reruns: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Lloyd)]
    pub algorithm: AlgorithmArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = ScenarioArg::PoissonWorld)]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dataset CSV destination; stdout when absent.
    #[arg(long)]
    pub out_file: Option<PathBuf>,
}
