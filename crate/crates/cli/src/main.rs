//! `stiefel` — experiments and utilities on St(n,p) under the β-metric
//! family. Subcommands: exp, log, bounds, sample, families, branch-demo,
//! slope, verify.
//!
//! Exit codes: 0 ok, 1 verification/runtime failure, 2 solver
//! non-convergence, 64 usage error.

mod commands;
mod svg;
mod tables;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "stiefel",
    version,
    about = "Geodesic distance bounds, exponentials and logarithms on the Stiefel manifold"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Svg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    /// Flip geodesics γ_k from U to h_k(U).
    Gamma,
    /// Planar block-rotation geodesics U·G_p(θt) (even p).
    Rotation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SampleMode {
    /// Independent Haar-random pairs.
    Haar,
    /// Targets built by exponentiating a random tangent inside the
    /// injectivity scale, so the primary distance is known exactly.
    Roundtrip,
}

#[derive(Args)]
pub struct ExpArgs {
    /// Metric parameter β > 0.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Base point file (matrix text format).
    #[arg(long)]
    pub point: PathBuf,
    /// Tangent direction file (ambient n×p matrix).
    #[arg(long)]
    pub tangent: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct LogArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Base point file.
    #[arg(long)]
    pub u: PathBuf,
    /// Target point file.
    #[arg(long)]
    pub utilde: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Residual tolerance on ‖Exp(Δ) − Ũ‖_F.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Write the recovered tangent here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Single evaluation point; ignored when --grid is given.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of grid rows over [0, 2√p].
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub beta: f64,
    /// Second metric for the equivalence experiment.
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SampleMode::Haar)]
    pub mode: SampleMode,
    /// Replace the last pair's target by −U.
    #[arg(long)]
    pub inject_antipodal: bool,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct FamiliesArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    /// Flip count; all k = 1..=p when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = FamilyKind::Gamma)]
    pub family: FamilyKind,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 100)]
    pub grid: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct BranchDemoArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SlopeArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub p: usize,
    /// Comma-separated metric parameters.
    #[arg(long, default_value = "0.25,0.5,1,1.5", value_delimiter = ',')]
    pub betas: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Frobenius gap at which the slope is read off.
    #[arg(long, default_value_t = 1e-6)]
    pub delta_small: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Riemannian exponential of a tangent file at a point file.
    Exp(ExpArgs),
    /// Shooting logarithm between two point files.
    Log(LogArgs),
    /// Envelope tables m̂_β, M̂_β (and w_β where defined).
    Bounds(BoundsArgs),
    /// Random-pair distance experiments with certificates.
    Sample(SampleArgs),
    /// Flip-geodesic traces (distance vs Frobenius distance).
    Families(FamiliesArgs),
    /// The two competing geodesics to −U on St(3,2) for β > 1.
    BranchDemo(BranchDemoArgs),
    /// Initial slope of the distance ratio at tiny Frobenius gaps.
    Slope(SlopeArgs),
    /// Run the built-in invariant suites.
    Verify(VerifyArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not usage errors
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::from(EXIT_OK);
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match cli.command {
        Command::Exp(args) => commands::cmd_exp(&args),
        Command::Log(args) => commands::cmd_log(&args),
        Command::Bounds(args) => commands::cmd_bounds(&args),
        Command::Sample(args) => commands::cmd_sample(&args),
        Command::Families(args) => commands::cmd_families(&args),
        Command::BranchDemo(args) => commands::cmd_branch_demo(&args),
        Command::Slope(args) => commands::cmd_slope(&args),
        Command::Verify(args) => commands::cmd_verify(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Errors carrying their CLI exit code.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError {
            message: msg.into(),
            code: EXIT_USAGE,
        }
    }

    pub fn failure(msg: impl Into<String>) -> Self {
        CliError {
            message: msg.into(),
            code: EXIT_FAILURE,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<stiefel_core::StiefelError> for CliError {
    fn from(e: stiefel_core::StiefelError) -> Self {
        // invalid input is the caller's doing, numerical trouble is ours
        match e {
            stiefel_core::StiefelError::InvalidInput(_)
            | stiefel_core::StiefelError::NotApplicable(_) => CliError::usage(e.to_string()),
            stiefel_core::StiefelError::NumericalFailure(_) => CliError::failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::failure(format!("i/o error: {e}"))
    }
}
