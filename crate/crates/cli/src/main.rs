//! `bucketing`: command-line driver for the bucketing experiments.
//!
//! Every run echoes its fully resolved configuration, including defaults,
//! as a header whose `replay` line reproduces the output byte for byte.
//! Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.

mod commands;
mod grid;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::grid::Grid;
use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "bucketing", version, about = "Bucketing codes and bucketing information experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bucketing information I(P, λ0, λ1, μ) over a parameter grid.
    Info(InfoArgs),
    /// Sub-conjugacy checks on a (λ0, λ1) grid, or the certified frontier.
    Subconj(SubconjArgs),
    /// Direct and work lower bounds for given set sizes and success.
    Bound(BoundArgs),
    /// Two-by-two conjecture scan on simplex grids.
    Conjecture(ConjectureArgs),
    /// Monte Carlo run of one code on planted-pair data.
    Simulate(SimulateArgs),
    /// Shell exponent table over (ρ, d) grids.
    Sweep(SweepArgs),
    /// Baseline exponents, Cauchy sign agreement or sparse-data hashes.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed for every randomized step.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Bernoulli agreement probability p: P = [[p/2, (1-p)/2], [(1-p)/2, p/2]].
    #[arg(long, conflicts_with = "matrix")]
    pub p: Option<f64>,
    /// JSON file `{"rows": b0, "cols": b1, "entries": [[...], ...]}`.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InfoMethod {
    /// Closed form at λ0 = λ1 = 1, optimizer elsewhere.
    Auto,
    Numeric,
    Closed,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, default_value = "1")]
    pub lambda0: Grid,
    #[arg(long, default_value = "1")]
    pub lambda1: Grid,
    /// μ grid; `inf` is accepted.
    #[arg(long, default_value = "1")]
    pub mu: Grid,
    #[arg(long, value_enum, default_value_t = InfoMethod::Auto)]
    pub method: InfoMethod,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SubconjArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, default_value = "0:1:0.25")]
    pub lambda0: Grid,
    #[arg(long, default_value = "0:1:0.25")]
    pub lambda1: Grid,
    /// Pass when the divergence-ratio supremum is at most 1 + tol.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Emit the certified frontier instead of grid checks.
    #[arg(long)]
    pub frontier: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long)]
    pub n0: f64,
    #[arg(long)]
    pub n1: f64,
    /// Success probability S of the code being bounded.
    #[arg(long, default_value_t = 1.0)]
    pub success: f64,
    /// Number of coordinates, each distributed as P.
    #[arg(long, default_value_t = 1)]
    pub copies: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ConjectureArgs {
    #[arg(long, default_value = "0.55:0.95:0.1")]
    pub p_grid: Grid,
    #[arg(long, default_value_t = 60)]
    pub resolution: usize,
    /// Margins at or above `-slack` are not violations.
    #[arg(long, default_value_t = 1e-9)]
    pub slack: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodeKind {
    Shell,
    Classical,
    Full,
    Typeclass,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub code: CodeKind,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long)]
    pub d: usize,
    /// Shell radius parameter.
    #[arg(long)]
    pub d0: Option<usize>,
    /// Coordinates per classical draw.
    #[arg(long)]
    pub k: Option<usize>,
    /// Classical draws.
    #[arg(long, default_value_t = 1)]
    pub draws: u64,
    /// Bucket count; shells default to the count guaranteeing 1 - 2 eps.
    #[arg(long)]
    pub t: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// JSON list of block grids for the type-class code; defaults to [P].
    #[arg(long)]
    pub blocks: Option<PathBuf>,
    /// Tensor power of the base code.
    #[arg(long, default_value_t = 1)]
    pub power: usize,
    #[arg(long)]
    pub n0: Option<usize>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value = "run")]
    pub experiment_id: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value = "0.02:0.2:0.02")]
    pub rho_grid: Grid,
    #[arg(long, default_value = "50:400:50")]
    pub d_grid: Grid,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    Exponents,
    Cauchy,
    Sparse,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum, default_value_t = BaselineKind::Exponents)]
    pub kind: BaselineKind,
    #[arg(long, default_value = "0.5:1:0.05")]
    pub p_grid: Grid,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    /// Hash lengths for the sparse experiment; n = 2^k.
    #[arg(long, default_value = "2:8:1")]
    pub k_grid: Grid,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<bucketing::Error> for CliError {
    fn from(e: bucketing::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
