use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "denfunc", version, about = "Plug-in estimates of density functionals on the unit cube")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a built-in functional of one or more samples.
    Estimate(EstimateArgs),
    /// Estimate Rényi-α conditional mutual information.
    Cmi(CmiArgs),
    /// Test conditional independence of X and Y given Z.
    Citest(CitestArgs),
    /// Print the bandwidth, bias, variance and interval constants.
    Bounds(BoundsArgs),
    /// Report mass, minimum and maximum of a fitted KDE over a grid.
    KdeCheck(KdeCheckArgs),
    /// Error-versus-n experiment on a synthetic density.
    Rate(RateArgs),
    /// Empirical deviation tail against the concentration bound.
    Tail(TailArgs),
}

/// Bandwidth selection: explicit `h`, or `c n^{-1/(β+d)}`.
#[derive(Debug, Clone, Args)]
pub struct BandwidthArgs {
    /// Smoothness β used by the bandwidth rule, kernel order and bias bound.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Constant c in h = min(1, c n^(-1/(β+d))).
    #[arg(long, conflicts_with = "bandwidth")]
    pub bandwidth_const: Option<f64>,
    /// Explicit bandwidth in (0, 1].
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Number of vanishing kernel moments; defaults to ⌈β⌉−1 (at least 1).
    #[arg(long)]
    pub kernel_order: Option<usize>,
}

/// Quadrature: tensor midpoint grid or Monte-Carlo points.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Midpoint grid with this many points per axis.
    #[arg(long, conflicts_with = "mc")]
    pub grid: Option<usize>,
    /// Monte-Carlo grid with this many points (drawn from --seed).
    #[arg(long)]
    pub mc: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ClipArgs {
    /// Lower clip bound κ₁ for density estimates.
    #[arg(long)]
    pub kappa_min: Option<f64>,
    /// Upper clip bound κ₂ for density estimates.
    #[arg(long)]
    pub kappa_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Functional name, e.g. shannon-entropy, kl, renyi-divergence, shannon-mi.
    #[arg(long)]
    pub functional: String,
    /// Order α for Rényi and Tsallis functionals.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Sample CSV, one per density argument (shannon-mi takes one joint sample).
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Columns of X in a shannon-mi joint sample.
    #[arg(long)]
    pub dx: Option<usize>,
    /// Fit the shannon-mi joint and marginals on disjoint halves.
    #[arg(long)]
    pub split: bool,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub clip: ClipArgs,
    /// Confidence level δ for the concentration interval.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Bias constant C_B.
    #[arg(long, default_value_t = 1.0)]
    pub bias_const: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    TwoWay,
    FourWay,
}

/// Data and estimator settings shared by `cmi` and `citest`.
#[derive(Debug, Args)]
pub struct CmiCommon {
    /// Sample CSV whose columns are X, then Y, then Z.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub dx: usize,
    #[arg(long)]
    pub dy: usize,
    #[arg(long)]
    pub dz: usize,
    /// Rényi order α, positive and not 1.
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub clip: ClipArgs,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// How rows are divided between the four density estimates.
    #[arg(long, value_enum, default_value_t = SplitArg::TwoWay)]
    pub cmi_split: SplitArg,
    /// Bias constant C_B.
    #[arg(long, default_value_t = 1.0)]
    pub bias_const: f64,
    /// Seeds the row split and any Monte-Carlo grid.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CmiArgs {
    #[command(flatten)]
    pub common: CmiCommon,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "conc")]
    Conc,
    #[value(name = "conc+bias")]
    ConcBias,
}

#[derive(Debug, Args)]
pub struct CitestArgs {
    #[command(flatten)]
    pub common: CmiCommon,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Conc)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub beta: f64,
    /// Dimension d.
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    /// Lipschitz constant C_f of the integrand.
    #[arg(long)]
    pub cf: f64,
    /// Kernel L1 norm; defaults to that of the kernel of order --kernel-order.
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub kernel_order: Option<usize>,
    /// Number of density arguments (McDiarmid arity).
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bias_const: f64,
    #[arg(long, conflicts_with = "bandwidth", default_value_t = 1.0)]
    pub bandwidth_const: f64,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KdeCheckArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub bandwidth: BandwidthArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Synthetic density `1 + a (∏ (2 sin² π x_j)^m − c)` and functional settings.
#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "shannon-entropy")]
    pub functional: String,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Dimension of the synthetic density.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Amplitude a; 0 gives the uniform density.
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    /// Exponent m of the density factor.
    #[arg(long, default_value_t = 1)]
    pub order: u32,
    #[command(flatten)]
    pub clip: ClipArgs,
    /// Smoothness β for the bandwidth rule and kernel order.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_const: f64,
    #[arg(long)]
    pub kernel_order: Option<usize>,
    /// Midpoint points per axis for every estimate.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot-ready CSV table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    #[arg(long)]
    pub n: usize,
    /// Comma-separated deviations ε; defaults to zero and the interval
    /// halfwidths at δ ∈ {0.9, 0.5, 0.1, 0.01}.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
}
