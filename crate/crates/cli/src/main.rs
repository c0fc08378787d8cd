//! `sparse-noma`: spectra, capacities, load sweeps and Monte Carlo checks
//! for regular sparse NOMA.
//!
//! Exit codes: 0 success, 1 validation or numerical failure, 2 usage or
//! domain error.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sparse_noma::NomaError;

#[derive(Parser, Debug)]
#[command(name = "sparse-noma", version, about = "Regular sparse NOMA: limiting spectra, capacities and checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Derived constants of the (d, beta_d) ensemble.
    Params(ParamsArgs),
    /// Samples of the limiting eigenvalue density.
    Density(DensityArgs),
    /// Closed-form spectral efficiencies and dense baselines at one SNR.
    Capacity(CapacityArgs),
    /// Rates versus load at fixed Eb/N0, with time-sharing envelopes.
    Sweep(SweepArgs),
    /// Finite-N Monte Carlo estimates against the closed forms.
    Montecarlo(MonteCarloArgs),
    /// Run the invariant suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Output format [default: csv; json for params]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    /// Nonzeros per user signature (column degree).
    #[arg(long)]
    pub d: u32,
    /// Users per resource (row degree).
    #[arg(long = "beta-d")]
    pub beta_d: u32,
}

#[derive(Args, Debug)]
pub struct ParamsArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Interior sample points on [lambda_minus, lambda_plus].
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Per-user SNR in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Column degree.
    #[arg(long)]
    pub d: u32,
    /// Eb/N0 in dB.
    #[arg(long = "ebn0-db", allow_hyphen_values = true)]
    pub ebn0_db: f64,
    #[arg(long = "beta-min")]
    pub beta_min: f64,
    #[arg(long = "beta-max")]
    pub beta_max: f64,
    /// Spacing of the load grid for the dense baselines and envelopes.
    #[arg(long = "beta-step", default_value_t = 0.05)]
    pub beta_step: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReceiverArg {
    Opt,
    Lmmse,
    Both,
}

#[derive(Args, Debug)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Per-user SNR in dB.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    pub snr_db: f64,
    /// Resources per realization, rounded up to an admissible size
    /// [default: 1200 optimum, 2000 LMMSE]
    #[arg(long)]
    pub n: Option<usize>,
    /// Independent realizations [default: 50 optimum, 20 LMMSE]
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Phase scheme of the nonzero weights: uniform, binary or repetition.
    #[arg(long, default_value = "binary")]
    pub phase: String,
    #[arg(long, value_enum, default_value_t = ReceiverArg::Both)]
    pub receiver: ReceiverArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Analytic checks plus reduced Monte Carlo sizes.
    #[arg(long)]
    pub quick: bool,
    /// Deliberately break one component (wrong-branch, drop-point-mass).
    #[arg(long = "inject-fault")]
    pub inject_fault: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Rendered output and whether every reported check passed.
pub struct Report {
    pub body: String,
    pub ok: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(NomaError),
    Io(std::io::Error),
}

impl From<NomaError> for CliError {
    fn from(e: NomaError) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(NomaError::Config(_) | NomaError::Domain(_)) => 2,
            CliError::Lib(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

fn write_out(common: &Common, body: &str) -> Result<(), CliError> {
    match &common.out {
        Some(path) => std::fs::write(path, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Params(a) => (&a.common, commands::params(a)),
        Command::Density(a) => (&a.common, commands::density(a)),
        Command::Capacity(a) => (&a.common, commands::capacity(a)),
        Command::Sweep(a) => (&a.common, commands::sweep(a)),
        Command::Montecarlo(a) => (&a.common, commands::montecarlo(a)),
        Command::Validate(a) => (&a.common, commands::validate(a)),
    };
    match result.and_then(|r| write_out(common, &r.body).map(|_| r.ok)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("sparse-noma: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
