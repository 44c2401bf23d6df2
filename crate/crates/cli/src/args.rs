use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use turnover_spectra::conditioning::{
    DEFAULT_DEGENERACY_TOLERANCE, DEFAULT_EIGEN_FLOOR, DEFAULT_REDUNDANCY_BOUND,
};
use turnover_spectra::ingest::EstimationMode;

/// Turnover reduction analytics for combined alpha portfolios.
#[derive(Debug, Parser)]
#[command(name = "turnover-spectra", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turnover report for a return panel or a correlation matrix.
    Analyze(AnalyzeArgs),
    /// Positive-definite repair of an estimated correlation matrix.
    Repair(RepairArgs),
    /// ρ*·N against N on synthetic one-factor panels.
    Sweep(SweepArgs),
    /// Monte-Carlo trade netting across alphas.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Repair(_) => "repair",
            Command::Sweep(_) => "sweep",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Rows where every series is observed.
    Complete,
    /// Per-pair overlapping rows; may not be positive semi-definite.
    Pairwise,
}

impl From<Mode> for EstimationMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Complete => EstimationMode::CompleteCases,
            Mode::Pairwise => EstimationMode::PairwiseComplete,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// CSV with one column per series, one row per timestamp, empty cells or NA for missing.
    Panel,
    /// Square CSV correlation matrix with a header of ids.
    Correlation,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PanelInput {
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "panel")]
    pub input_kind: InputKind,

    /// Data rows run oldest to newest instead of newest first.
    #[arg(long)]
    pub oldest_first: bool,

    #[arg(long, value_enum, default_value = "complete")]
    pub mode: Mode,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Conditioning {
    /// Redundancy bound Ψ*: of any pair with |Ψ| above it, the later series is dropped.
    #[arg(long, default_value_t = DEFAULT_REDUNDANCY_BOUND)]
    pub prune: f64,

    /// Repair a matrix that is not positive definite (default).
    #[arg(long, overrides_with = "no_repair")]
    #[serde(skip)]
    pub repair: bool,

    /// Refuse, with exit status 2, a matrix that is not positive semi-definite.
    #[arg(long, overrides_with = "repair")]
    pub no_repair: bool,

    /// Eigenvalue floor λ* used by the repair.
    #[arg(long, default_value_t = DEFAULT_EIGEN_FLOOR)]
    pub floor: f64,

    /// Relative top-eigenvalue gap below which the first component is flagged as degenerate.
    #[arg(long, default_value_t = DEFAULT_DEGENERACY_TOLERANCE)]
    pub degeneracy_tol: f64,
}

impl Conditioning {
    pub fn repair_enabled(&self) -> bool {
        !self.no_repair
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: PanelInput,

    /// Report path (JSON).
    #[arg(long)]
    pub output: PathBuf,

    /// Factor return panel; every series is replaced by its OLS residual on these factors.
    #[arg(long)]
    pub factors: Option<PathBuf>,

    /// CSV with columns id,tau and optionally weight. Default: τ = 1 and equal weights.
    #[arg(long)]
    pub turnovers: Option<PathBuf>,

    #[command(flatten)]
    #[serde(flatten)]
    pub conditioning: Conditioning,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RepairArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: PanelInput,

    /// Repaired correlation matrix (CSV). Metadata goes to `<output>.meta.json`.
    #[arg(long)]
    pub output: PathBuf,

    /// Prune redundant series with this Ψ* before repairing.
    #[arg(long)]
    pub prune: Option<f64>,

    #[arg(long, default_value_t = DEFAULT_EIGEN_FLOOR)]
    pub floor: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Comma-separated N values, at least two, strictly increasing.
    #[arg(long)]
    pub grid: String,

    /// Uniform pairwise correlation of the generator.
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,

    /// Observations per generated series.
    #[arg(long, default_value_t = 5000)]
    pub periods: usize,

    #[arg(long, value_enum, default_value = "complete")]
    pub mode: Mode,

    #[command(flatten)]
    #[serde(flatten)]
    pub conditioning: Conditioning,

    /// Master seed. TURNOVER_SPECTRA_SEED takes precedence when set.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Sweep CSV. The fit summary goes to `<output>.summary.json`.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Number of alphas.
    #[arg(long)]
    pub n: usize,

    /// Uniform pairwise correlation of the alphas' positions.
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,

    #[arg(long, default_value_t = 100)]
    pub instruments: usize,

    #[arg(long, default_value_t = 200)]
    pub paths: usize,

    /// Master seed. TURNOVER_SPECTRA_SEED takes precedence when set.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Result path (JSON).
    #[arg(long)]
    pub output: PathBuf,
}
