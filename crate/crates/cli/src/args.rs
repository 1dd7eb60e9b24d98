use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "whichway", version, about = "Which-way knowledge of a two-path interferometer with a qubit detector")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase-dependent knowledge of each protocol over one period.
    SweepDelta(SweepDeltaArgs),
    /// Phase-averaged knowledge and duality excess over a visibility grid.
    SweepVisibility(SweepVisibilityArgs),
    /// Gate-level Monte Carlo estimates against the analytic values.
    Montecarlo(MonteCarloArgs),
    /// Runs the built-in invariant checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolArg {
    Natural,
    Canonical,
    Simplified,
    Ff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderArg {
    QoFirst,
    WwdFirst,
}

#[derive(Debug, Args, Serialize)]
pub struct SeedArg {
    /// Master seed.
    #[arg(long, env = "WHICHWAY_SEED", default_value_t = whichway::feedforward::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizerArgs {
    /// Equally spaced phases over [0, 2π], both ends included.
    #[arg(long, default_value_t = whichway::feedforward::DEFAULT_DELTA_POINTS)]
    pub delta_points: usize,
    /// Random bases tried per phase by the feed-forward optimizer.
    #[arg(long, default_value_t = whichway::feedforward::DEFAULT_SAMPLES_PER_DELTA)]
    pub samples: usize,
    /// Polish each optimized basis with a local search.
    #[arg(long)]
    pub refine: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepDeltaArgs {
    #[arg(long)]
    pub visibility: f64,
    #[arg(long, value_delimiter = ',', default_value = "natural,canonical,simplified,ff")]
    pub protocols: Vec<ProtocolArg>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also draw the curves to this SVG file.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepVisibilityArgs {
    /// `start:step:stop` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "0:0.05:0.95")]
    pub v_grid: String,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MonteCarloArgs {
    /// Detector rotation angle in [0, π/2].
    #[arg(long, conflicts_with = "visibility", required_unless_present = "visibility")]
    pub theta: Option<f64>,
    #[arg(long)]
    pub visibility: Option<f64>,
    /// `natural`, `canonical`, or a JSON file holding three vectors of
    /// `[re, im]` pairs.
    #[arg(long, default_value = "natural")]
    pub basis: String,
    /// Also run the fixed-phase experiment at this screen phase.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value_t = OrderArg::QoFirst)]
    pub order: OrderArg,
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Fast subset (the default).
    #[arg(long, conflicts_with = "full")]
    pub quick: bool,
    /// Full-size sweeps.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub tolerance_scale: f64,
}
