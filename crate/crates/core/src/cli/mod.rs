//! Command-line driver.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::estimator::Aggregation;
use crate::mesh::{Diagonal, Domain};

pub use output::{ERROR_PROXY, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "quadcurl",
    version = VERSION,
    about = "H(curl^2)-conforming finite elements for the quad-curl eigenvalue problem",
    args_override_self = true
)]
pub struct Cli {
    /// Worker threads for assembly and estimators (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Single-threaded run with bit-identical output.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// File of `key=value` lines providing defaults for the command's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Smallest eigenvalues on one or more meshes.
    Eigs(EigsArgs),
    /// First eigenvalue on halved meshes with relative errors and orders.
    Rates(RatesArgs),
    /// A posteriori estimators of one eigenpair per level.
    Estimate(EstimateArgs),
    /// Solve, estimate, mark and bisect for a number of iterations.
    Adapt(AdaptArgs),
    /// Unisolvence, reproduction, conformity and interpolation-order checks.
    CheckElement(CheckArgs),
    /// Export a structured mesh or summarize an imported one.
    Mesh(MeshArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainArg {
    Square,
    Lshape,
    SquareHole,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Square => Domain::Square,
            DomainArg::Lshape => Domain::Lshape,
            DomainArg::SquareHole => Domain::SquareHole,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalArg {
    Forward,
    Backward,
}

impl From<DiagonalArg> for Diagonal {
    fn from(d: DiagonalArg) -> Self {
        match d {
            DiagonalArg::Forward => Diagonal::Forward,
            DiagonalArg::Backward => Diagonal::Backward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationArg {
    Grouped,
    Single,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Grouped => Aggregation::Grouped,
            AggregationArg::Single => Aggregation::Single,
        }
    }
}

/// Problem and solver settings shared by the solving commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub domain: DomainArg,
    /// Polynomial degree (4..=8).
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Number of eigenpairs.
    #[arg(long, default_value_t = 5)]
    pub nev: usize,
    /// Relative eigenvalue change between iterations.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Relative residual bound of returned pairs.
    #[arg(long, default_value_t = 1e-10)]
    pub residual_tol: f64,
    /// Shift of the iteration operator.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub shift: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// Seed of the random start block.
    #[arg(long, default_value_t = 20)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "backward")]
    pub diagonal: DiagonalArg,
    /// Output file (default: standard output).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EigsArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Cells per unit length of the structured meshes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,8")]
    pub levels: Vec<usize>,
    /// Solve on an imported mesh instead of the structured levels.
    #[arg(long, value_name = "FILE")]
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Successively doubled cells per unit length, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub levels: Vec<usize>,
    /// 1-based index of the eigenpair to estimate.
    #[arg(long, default_value_t = 1)]
    pub eigen_index: usize,
    #[arg(long, value_enum, default_value = "grouped")]
    pub aggregation: AggregationArg,
    /// Prefix of per-entity CSV files, one per level (`<prefix>-n<n>.csv`).
    #[arg(long, value_name = "PREFIX")]
    pub entities: Option<PathBuf>,
    /// Fail unless the log-log slopes of the bound and of the error proxy
    /// agree within this tolerance.
    #[arg(long, value_name = "TOL")]
    pub check_slope: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RatesArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Successively doubled cells per unit length, at least three.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AdaptArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Cells per unit length of the initial mesh.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Dörfler fraction in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1)]
    pub eigen_index: usize,
    /// Write the final mesh to this file.
    #[arg(long, value_name = "FILE")]
    pub mesh_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MeshArgs {
    #[arg(long, value_enum, default_value = "square")]
    pub domain: DomainArg,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "backward")]
    pub diagonal: DiagonalArg,
    /// Summarize this mesh file instead of generating one.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::UnsupportedDegree(_) | Error::InvalidSubdivision { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

const SUBCOMMANDS: [&str; 6] = ["eigs", "rates", "estimate", "adapt", "check-element", "mesh"];

/// Reads `key=value` lines (`#` comments, blank lines ignored) as flags.
pub fn config_flags(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Inserts the flags of a `--config` file right after the subcommand name so
/// that flags given on the command line take precedence.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < strs.len() {
        let a = &strs[i];
        if a == "--config" {
            config = strs.get(i + 1).cloned();
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(v.to_string());
        } else if a == "--threads" {
            i += 1;
        } else if sub.is_none() && SUBCOMMANDS.contains(&a.as_str()) {
            sub = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config, sub) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {path}: {e}")))?;
    let flags = config_flags(&text)?;
    let mut out = args[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}

fn configure_threads(cli: &Cli) -> Result<(), CliError> {
    faer::set_global_parallelism(faer::Par::Seq);
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Messages go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match configure_threads(&cli).and_then(|_| commands::dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
