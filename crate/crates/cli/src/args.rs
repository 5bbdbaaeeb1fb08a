use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ctstat::laplace::InversionMethod;
use ctstat::renewal::InterEventLaw;
use ctstat::stats::{
    JumpLaw, StatisticKind, DEFAULT_CONV_BUDGET, DEFAULT_GRID_CELLS, DEFAULT_MAX_GRID_CELLS,
};

pub const THREADS_ENV: &str = "CTSTAT_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "ctstat",
    version,
    about = "Continuous-time sum and maximum statistics, relaxation solver and Monte Carlo checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Write output here instead of stdout
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Output format (default: csv, json for `compare`)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for Monte Carlo runs; 0 uses every core
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    /// Master seed for random streams
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Mittag-Leffler function E_alpha(z)
    Ml(MlArgs),
    /// Counting pmf P(N(t) = n)
    Pmf(PmfArgs),
    /// One simulated sequence of renewal epochs
    Epochs(EpochsArgs),
    /// Numeric inverse Laplace transform of a named symbol
    Invert(InvertArgs),
    /// Analytic CDF of a continuous-time statistic
    Analytic(AnalyticArgs),
    /// Semi-Markov chain marginals p_ij(t)
    Chain(ChainArgs),
    /// Relaxation equation with a delta or power-law memory kernel
    Solve(SolveArgs),
    /// Monte Carlo samples of a continuous-time statistic
    Simulate(SimulateArgs),
    /// Kolmogorov-Smirnov comparison of simulation against the analytic CDF
    Compare(CompareArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ml(_) => "ml",
            Command::Pmf(_) => "pmf",
            Command::Epochs(_) => "epochs",
            Command::Invert(_) => "invert",
            Command::Analytic(_) => "analytic",
            Command::Chain(_) => "chain",
            Command::Solve(_) => "solve",
            Command::Simulate(_) => "simulate",
            Command::Compare(_) => "compare",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct MlArgs {
    #[arg(long)]
    pub alpha: f64,
    /// Arguments z, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub z: Vec<f64>,
}

/// Waiting-time law, as `--waits exp:RATE|ml:ALPHA` or the shorthand `--alpha`.
#[derive(Debug, Args, Serialize)]
pub struct WaitsArgs {
    /// Waiting-time law: exp:RATE or ml:ALPHA
    #[arg(long, value_parser = parse_waits, conflicts_with = "alpha")]
    pub waits: Option<InterEventLaw>,
    /// Mittag-Leffler waiting times of this order (same as --waits ml:ALPHA)
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl WaitsArgs {
    pub fn resolve(&self) -> ctstat::Result<InterEventLaw> {
        match (self.waits, self.alpha) {
            (Some(w), _) => Ok(w),
            (None, Some(a)) => InterEventLaw::mittag_leffler(a),
            (None, None) => InterEventLaw::exponential(1.0),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PmfArgs {
    #[command(flatten)]
    pub waits: WaitsArgs,
    #[arg(long)]
    pub t: f64,
    /// Last n to tabulate; without it the table stops once the tail is below --tol
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EpochsArgs {
    #[command(flatten)]
    pub waits: WaitsArgs,
    #[arg(long)]
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Talbot,
    GaverStehfest,
}

impl From<MethodArg> for InversionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Talbot => InversionMethod::Talbot,
            MethodArg::GaverStehfest => InversionMethod::GaverStehfest,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    /// density, survival, pmf:N (counting pmf) or mw:V (Montroll-Weiss generating function)
    #[arg(long)]
    pub symbol: String,
    #[command(flatten)]
    pub waits: WaitsArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Talbot)]
    pub method: MethodArg,
    /// Number of nodes (Talbot) or Stehfest order; defaults to 32 and 14
    #[arg(long)]
    pub order: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StatArg {
    Sum,
    Max,
}

impl From<StatArg> for StatisticKind {
    fn from(s: StatArg) -> Self {
        match s {
            StatArg::Sum => StatisticKind::Sum,
            StatArg::Max => StatisticKind::Max,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct StatisticArgs {
    #[arg(long, value_enum)]
    pub stat: StatArg,
    /// Jump law: exp:RATE, uniform:B, pareto:SCALE:EXPONENT or degenerate:C
    #[arg(long, value_parser = parse_jumps)]
    pub jumps: JumpLaw,
    #[command(flatten)]
    pub waits: WaitsArgs,
    #[arg(long)]
    pub t: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvolutionArgs {
    /// Truncation tolerance of the counting-pmf mixture
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Starting lattice cells for sums over uniform or Pareto jumps
    #[arg(long, default_value_t = DEFAULT_GRID_CELLS)]
    pub grid_cells: usize,
    /// Lattice refinement stops at this many cells
    #[arg(long, default_value_t = DEFAULT_MAX_GRID_CELLS)]
    pub max_grid_cells: usize,
    /// Largest accepted lattice error estimate
    #[arg(long, default_value_t = DEFAULT_CONV_BUDGET)]
    pub conv_budget: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub statistic: StatisticArgs,
    /// Evaluation points, comma separated
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "grid",
        required_unless_present = "grid"
    )]
    pub u: Vec<f64>,
    /// Evenly spaced evaluation points START:STOP:COUNT
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[command(flatten)]
    pub convolution: ConvolutionArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainMethod {
    Analytic,
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct ChainArgs {
    /// State labels, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub states: Vec<String>,
    /// One transition-matrix row per flag, comma separated
    #[arg(long = "row", required = true)]
    pub rows: Vec<String>,
    #[arg(long)]
    pub start: String,
    #[command(flatten)]
    pub waits: WaitsArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ChainMethod::Analytic)]
    pub method: ChainMethod,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Paths for --method mc
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelArg {
    Delta,
    Powerlaw,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub kernel: KernelArg,
    /// Order of the power-law kernel
    #[arg(long, required_if_eq("kernel", "powerlaw"))]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub tmax: f64,
    #[arg(long)]
    pub h: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub statistic: StatisticArgs,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub statistic: StatisticArgs,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// KS threshold is COEF/sqrt(n)
    #[arg(long, default_value_t = ctstat::mc::KS_COEFFICIENT)]
    pub ks_coef: f64,
    #[command(flatten)]
    pub convolution: ConvolutionArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.start + k as f64 * step)
            .collect()
    }
}

fn numbers(s: &str, expected: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != expected {
        return Err(format!(
            "expected {expected} colon-separated fields in {s:?}"
        ));
    }
    parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let v = numbers(s, 3)?;
    if v[2] < 1.0 || v[2].fract() != 0.0 {
        return Err(format!(
            "grid count must be a positive integer, got {}",
            v[2]
        ));
    }
    if !(v[1] >= v[0]) {
        return Err("grid stop must not be below start".into());
    }
    Ok(Grid {
        start: v[0],
        stop: v[1],
        count: v[2] as usize,
    })
}

fn split_law(s: &str) -> Result<(&str, &str), String> {
    s.split_once(':')
        .ok_or_else(|| format!("expected NAME:PARAMS, got {s:?}"))
}

pub fn parse_jumps(s: &str) -> Result<JumpLaw, String> {
    let (name, rest) = split_law(s)?;
    let law = match name {
        "exp" | "exponential" => JumpLaw::exponential(numbers(rest, 1)?[0]),
        "uniform" => JumpLaw::uniform(numbers(rest, 1)?[0]),
        "pareto" => {
            let v = numbers(rest, 2)?;
            JumpLaw::pareto(v[0], v[1])
        }
        "degenerate" | "const" => JumpLaw::degenerate(numbers(rest, 1)?[0]),
        _ => {
            return Err(format!(
                "unknown jump law {name:?}; use exp, uniform, pareto or degenerate"
            ))
        }
    };
    law.map_err(|e| e.to_string())
}

pub fn parse_waits(s: &str) -> Result<InterEventLaw, String> {
    let (name, rest) = split_law(s)?;
    let v = numbers(rest, 1)?[0];
    let law = match name {
        "exp" | "exponential" => InterEventLaw::exponential(v),
        "ml" | "mittag-leffler" => InterEventLaw::mittag_leffler(v),
        _ => return Err(format!("unknown waiting-time law {name:?}; use exp or ml")),
    };
    law.map_err(|e| e.to_string())
}
