use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dkps::cpo::{MahalanobisSetting, Pairing};
use dkps::report::ReportKind;
use dkps::MatrixEncoding;

#[derive(Debug, Parser)]
#[command(
    name = "dkps",
    version,
    about = "Perspective-space analysis of generative model populations"
)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Dimension: `auto` or a count (MDS, PCA); embedding dimension for `simulate`.
    #[arg(long, global = true)]
    pub dim: Option<String>,

    /// Output file, or output directory for multi-file commands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format of the primary result.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset.
    Simulate(SimulateArgs),
    /// Per-model replicate means.
    Summarize(InputArg),
    /// Pairwise model distances.
    Distance(InputArg),
    /// Classical MDS of a distance table or dataset.
    Mds(InputArg),
    /// Principal components of a matrix file or one dataset model.
    Pca(PcaArgs),
    /// Per-query squared bias and variance against the reference model.
    Biasvar(BiasvarArgs),
    /// Convex-hull membership experiment.
    HullExp(HullArgs),
    /// Preference-optimized Gaussian fits.
    #[command(subcommand)]
    Cpo(CpoCommand),
    /// Mahalanobis distances between human, sequential and batch outputs.
    Mdkps(MdkpsArgs),
    /// Render a figure and its table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// Dataset directory or manifest; `mds` also takes a distance CSV.
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Replicates,
    Triplets,
    PairedClouds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    Random,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Gaussian,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Identity,
    Rotation,
    RotationNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Encoding {
    Binary,
    Csv,
}

impl From<Encoding> for MatrixEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Binary => MatrixEncoding::Binary,
            Encoding::Csv => MatrixEncoding::Csv,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimKind::Replicates)]
    pub kind: SimKind,
    /// Number of models.
    #[arg(long)]
    pub models: Option<usize>,
    /// Number of queries (sentences, or points for paired clouds).
    #[arg(long)]
    pub queries: Option<usize>,
    /// Replicates per model and query.
    #[arg(long, default_value_t = 10)]
    pub r: usize,
    /// Preferred and dispreferred samples per sentence.
    #[arg(long, default_value_t = 10)]
    pub t: usize,
    /// Noise standard deviation.
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long, value_enum, default_value_t = Noise::Gaussian)]
    pub noise: Noise,
    #[arg(long, value_enum, default_value_t = Layout::Random)]
    pub layout: Layout,
    /// Make the last N models ranked batch outputs with graded noise.
    #[arg(long, default_value_t = 0)]
    pub batch_ranks: usize,
    #[arg(long, value_enum, default_value_t = MapKind::Identity)]
    pub map: MapKind,
    /// Rotation angle in radians.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Target noise for `--map rotation-noise`.
    #[arg(long, default_value_t = 0.5)]
    pub map_sigma: f64,
    #[arg(long, value_enum, default_value_t = Encoding::Binary)]
    pub encoding: Encoding,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// Matrix file, or dataset with `--model`.
    pub input: PathBuf,
    /// Dataset model whose summary is analysed.
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Sequential,
    Batch,
    Other,
}

#[derive(Debug, Args)]
pub struct BiasvarArgs {
    pub input: PathBuf,
    /// Only pool models with this source tag (default: every non-reference model).
    #[arg(long, value_enum)]
    pub source: Option<SourceArg>,
}

#[derive(Debug, Args)]
pub struct HullArgs {
    /// Paired-cloud JSON from `simulate --kind paired-clouds`, or a dataset with `--src`/`--tgt`.
    pub input: PathBuf,
    #[arg(long)]
    pub src: Option<String>,
    #[arg(long)]
    pub tgt: Option<String>,
    #[arg(long, default_value_t = 500)]
    pub repeats: usize,
    #[arg(long, default_value_t = 4)]
    pub sample_size: usize,
    /// Nearest out-of-sample points per repeat.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct CpoArgs {
    /// Dataset with a human reference, sequential and ranked batch models.
    pub input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value = "by_rank")]
    pub pairing: Pairing,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub cov_floor: f64,
    /// Initial line-search step.
    #[arg(long, default_value_t = 1.0)]
    pub step_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    Preferred,
    Dispreferred,
}

#[derive(Debug, Subcommand)]
pub enum CpoCommand {
    /// Fit every sentence.
    Fit(CpoArgs),
    /// Loss terms at given fits (default: the maximum-likelihood start).
    Loss {
        #[command(flatten)]
        cpo: CpoArgs,
        /// JSON written by `cpo fit`.
        #[arg(long)]
        fits: Option<PathBuf>,
    },
    /// Squared bias and variance of the fitted Gaussians.
    Biasvar {
        #[command(flatten)]
        cpo: CpoArgs,
        #[arg(long)]
        fits: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ClassArg::Preferred)]
        class: ClassArg,
    },
}

#[derive(Debug, Args)]
pub struct MdkpsArgs {
    #[command(flatten)]
    pub cpo: CpoArgs,
    #[arg(long, default_value = "joint")]
    pub setting: MahalanobisSetting,
    /// JSON written by `cpo fit`; fits are computed when absent.
    #[arg(long)]
    pub fits: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// biasvar_scatter, dkps_pairs, hull_histogram, distance_heatmap or scree.
    pub kind: ReportKind,
    /// biasvar CSV, dataset, hull-exp JSON or distance CSV, by kind.
    pub input: PathBuf,
}
