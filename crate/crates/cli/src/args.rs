use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Three-arm divergent-delivery laboratory: auction simulation, mediation
/// decomposition and panel inference.
#[derive(Debug, Parser)]
#[command(name = "triarm", version, about, long_about = None, propagate_version = true)]
pub struct Cli {
    /// Cap on worker threads; 0 uses every core.
    #[arg(long, global = true, env = "TRIARM_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// TOML file with one table per subcommand, e.g. `[sim]`; flags
    /// override its values [default: none].
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Paired three-arm Monte Carlo on the delivery model.
    Sim(SimArgs),
    /// Repeat the simulation at several focal-bid percentiles on shared draws.
    Sweep(SweepArgs),
    /// Find the focal female noise level that produces a target NIE.
    InvertSigma(InvertArgs),
    /// Tune the click-rate concentration (and female click mean) to targets.
    Calibrate(CalibrateArgs),
    /// Count-based decomposition of a panel with Bernoulli standard errors.
    Decompose(DecomposeArgs),
    /// Weighted regression, HC3 contrasts and Romano-Wolf adjusted p-values.
    Infer(InferArgs),
    /// Observed-to-Bernoulli variance ratios of cell rates.
    Dispersion(DispersionArgs),
    /// Per-cell balance of impression shares between two arms.
    Audit(AuditArgs),
    /// Integer arm sizes minimizing the variance of the three contrasts.
    Allocate(AllocateArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Write the JSON report to this file [default: not written].
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,

    /// Write plot-ready CSV rows to this file [default: not written].
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Print the JSON report on stdout instead of the summary table
    /// [default: off].
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineArg {
    Auto,
    Exact,
    OrderStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PairingArg {
    Shared,
    Independent,
}

/// Population, bid and engine settings shared by the simulation commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelArgs {
    /// Users per round [default: 10000].
    #[arg(long)]
    pub n_users: Option<usize>,
    /// Advertisers including the focal one [default: 500].
    #[arg(long)]
    pub n_advertisers: Option<usize>,
    /// Probability that a user is male [default: 0.462].
    #[arg(long)]
    pub male_share: Option<f64>,
    /// Fraction of advertisers matched to each user [default: 0.1].
    #[arg(long)]
    pub match_quantile: Option<f64>,
    /// Mean of the Beta click-rate distribution [default: 0.02].
    #[arg(long)]
    pub click_mean: Option<f64>,
    /// Beta concentration of click rates [default: 50].
    #[arg(long)]
    pub click_concentration: Option<f64>,
    /// Focal advertiser's mean click rate on female users [default: click-mean].
    #[arg(long)]
    pub female_click_mean: Option<f64>,
    /// Two bid quantiles `AMOUNT@PERCENTILE,AMOUNT@PERCENTILE` fixing the
    /// LogNormal bid distribution [default: 2.28@0.95,3.63@0.995].
    #[arg(long, value_name = "Q1,Q2")]
    pub bid_quantiles: Option<String>,
    /// Focal bid as a percentile of the bid distribution [default: 0.995].
    #[arg(long, conflicts_with = "bid_amount")]
    pub bid_percentile: Option<f64>,
    /// Focal bid as an amount, replacing the percentile [default: unset].
    #[arg(long)]
    pub bid_amount: Option<f64>,
    /// Share of competitors whose signals carry the competitor noise
    /// levels [default: 0].
    #[arg(long)]
    pub noisy_competitor_share: Option<f64>,
    /// Competitor noise sd on female users [default: 0].
    #[arg(long)]
    pub competitor_sigma_female: Option<f64>,
    /// Competitor noise sd on male users [default: 0].
    #[arg(long)]
    pub competitor_sigma_male: Option<f64>,
    /// Focal noise sd on male users in S(B) [default: 0].
    #[arg(long)]
    pub sigma_male: Option<f64>,
    /// Delivery engine [default: auto].
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Monte Carlo rounds [default: 1000].
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Focal noise sd on female users in S(B) [default: 0.03].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// How arms share random numbers within a round [default: shared].
    #[arg(long, value_enum)]
    pub pairing: Option<PairingArg>,
    /// Confidence level of reported intervals [default: 0.95].
    #[arg(long)]
    pub ci_level: Option<f64>,
    /// Random seed (required).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub experiment: ExperimentArgs,
    /// Focal-bid percentiles [default: 0.95,0.98,0.995].
    #[arg(long, value_delimiter = ',')]
    pub percentiles: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct InvertArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub experiment: ExperimentArgs,
    /// Target impression-level NIE in percentage points (required unless
    /// --target-sigma is given).
    #[arg(long, conflicts_with = "target_sigma")]
    pub target: Option<f64>,
    /// Simulate the NIE at this sigma and invert it back (required unless
    /// --target is given).
    #[arg(long)]
    pub target_sigma: Option<f64>,
    /// Upper end of the sigma search interval [default: 0.2].
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// Stop when the NIE is this close to the target, in percentage points
    /// [default: 0.01].
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Target NIE in percentage points [default: 18.45].
    #[arg(long)]
    pub target_nie: Option<f64>,
    /// Target noise-free female share in percentage points; when set the
    /// female click mean is tuned as well [default: unset].
    #[arg(long)]
    pub baseline_share: Option<f64>,
    /// Focal female noise sd at which the NIE target applies [default: 0.03].
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeArg {
    FemaleShare,
    Ctr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BidArg {
    High,
    Low,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelArgs {
    /// Panel CSV with columns arm,bid_level,age_band,gender,day,time_slot,
    /// impressions,clicks,reach,spend (required).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Bid level to analyse [default: high].
    #[arg(long, value_enum)]
    pub bid: Option<BidArg>,
    /// Drop unknown-gender rows on load [default: off].
    #[arg(long)]
    pub exclude_unknown: bool,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DecomposeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub panel: PanelArgs,
    /// Outcome [default: female-share].
    #[arg(long, value_enum)]
    pub outcome: Option<OutcomeArg>,
    /// Confidence level [default: 0.95].
    #[arg(long)]
    pub ci_level: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Aggregate,
    PerCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SeArg {
    Hc3,
    Bernoulli,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct InferArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub panel: PanelArgs,
    /// Outcome [default: female-share].
    #[arg(long, value_enum)]
    pub outcome: Option<OutcomeArg>,
    /// Hypothesis family [default: aggregate].
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Bootstrap draws [default: 5000].
    #[arg(long = "B", id = "draws")]
    #[serde(rename = "B")]
    pub draws: Option<usize>,
    /// Standard errors [default: hc3].
    #[arg(long, value_enum)]
    pub se: Option<SeArg>,
    /// Confidence level [default: 0.95].
    #[arg(long)]
    pub ci_level: Option<f64>,
    /// Family-wise level for the Bonferroni cutoff [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Random seed (required for hc3).
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseArg {
    Day,
    DaySlot,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DispersionArgs {
    /// Panel CSV (required).
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Drop unknown-gender rows on load [default: off].
    #[arg(long)]
    pub exclude_unknown: bool,
    /// Unit at which cell rates are formed [default: day-slot].
    #[arg(long, value_enum)]
    pub collapse: Option<CollapseArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub panel: PanelArgs,
    /// First arm [default: 1].
    #[arg(long)]
    pub arm_a: Option<u8>,
    /// Second arm [default: 2].
    #[arg(long)]
    pub arm_b: Option<u8>,
    /// Keep unknown-gender cells in the audit [default: off].
    #[arg(long)]
    pub include_unknown: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct AllocateArgs {
    /// Outcome standard deviations of the three arms [default: 1,1,1].
    #[arg(long, value_delimiter = ',')]
    pub sd: Option<Vec<f64>>,
    /// Total sample size (required).
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}
