//! The `geomnet` command line tool.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | a requested check failed or training diverged |
//! | 2 | invalid flags or configuration |
//! | 3 | unreadable or malformed input |

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
pub mod manifest;

pub use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {source}")]
    Input { context: String, source: geomnet::Error },
    #[error(transparent)]
    Core(#[from] geomnet::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(geomnet::Error::InvalidConfig(_) | geomnet::Error::InvalidParity(_)) => 2,
            CliError::Io { .. } | CliError::Input { .. } | CliError::Core(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser, Serialize)]
#[command(name = "geomnet", version, about = "Geometric images, invariant filters and GI-Net experiments")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "GEOMNET_THREADS")]
    pub threads: Option<usize>,
    /// Print a machine-readable JSON summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Enumerate the complete bank of B_d-invariant filters.
    Filters(FiltersArgs),
    /// Count equivariant polynomial maps of vector images.
    Count(CountArgs),
    /// Test a network for equivariance under B_d and translations.
    CheckEquivariance(CheckArgs),
    /// Generate a physics dataset.
    GenData(GenDataArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Evaluate a trained model on a dataset split.
    Eval(EvalArgs),
    /// Write a named architecture and report its parameter count.
    Preset(PresetArgs),
    /// Train both model kinds across training-set sizes.
    Sweep(SweepArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct FiltersArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long = "M", default_value_t = 3)]
    #[serde(rename = "M")]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub k: usize,
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub parity: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Closed,
    Molien,
    Empirical,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long)]
    pub degree: usize,
    #[arg(long, value_enum, default_value_t = CountMode::All)]
    pub mode: CountMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Candidate maps evaluated before the empirical search gives up.
    #[arg(long, default_value_t = 2_000_000)]
    pub max_candidates: usize,
    /// Probe images for the empirical search.
    #[arg(long)]
    pub probes: Option<usize>,
    /// Wall-clock budget; results then depend on machine speed.
    #[arg(long)]
    pub max_seconds: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CheckArgs {
    /// Architecture or model document.
    #[arg(long, conflicts_with = "preset")]
    pub net: Option<PathBuf>,
    /// Named architecture instead of --net.
    #[arg(long)]
    pub preset: Option<String>,
    /// Model document or JSON array of parameters; random draws otherwise.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 5)]
    #[serde(rename = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 5)]
    pub translations: usize,
    /// Standard deviation of random parameters; 0 checks the zero map.
    #[arg(long, default_value_t = 0.1)]
    pub init_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemArg {
    Gravity,
    Charge,
}

impl From<ProblemArg> for geomnet::physics::Problem {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Gravity => geomnet::physics::Problem::Gravity,
            ProblemArg::Charge => geomnet::physics::Problem::Charge,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PhysicsArgs {
    #[arg(long = "N", default_value_t = 16)]
    #[serde(rename = "N")]
    pub n: usize,
    /// Masses per gravity sample.
    #[arg(long, default_value_t = 5)]
    pub masses: usize,
    /// Charges per charge sample.
    #[arg(long, default_value_t = 5)]
    pub charges: usize,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub dt: f64,
    /// Euler steps T.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Sigmoid squash scale.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub squash: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub train: usize,
    #[arg(long, default_value_t = 5)]
    pub val: usize,
    #[arg(long, default_value_t = 10)]
    pub test: usize,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ginet,
    Baseline,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelChoice {
    /// Model kind; picks the preset matching the dataset's problem.
    #[arg(long, value_enum, default_value_t = ModelKind::Ginet)]
    pub model: ModelKind,
    /// Named architecture, overriding --model.
    #[arg(long)]
    pub preset: Option<String>,
    /// Architecture document, overriding --model and --preset.
    #[arg(long)]
    pub net: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainOverrides {
    /// Training configuration document.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset directory written by gen-data.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelChoice,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model_file: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PresetArgs {
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    /// Dataset seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,50")]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub val: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub test: usize,
    /// Training seeds; every (size, model) pair is trained once per seed.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub train_seeds: Vec<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ginet,baseline")]
    pub models: Vec<ModelKind>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Human-readable text plus the JSON summary printed with `--json`.
pub struct Outcome {
    pub text: String,
    pub json: serde_json::Value,
    /// Set when a requested check failed; the outcome is still printed.
    pub failure: Option<String>,
}

/// Parses `args` and runs the command, printing to `out`. Returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            let _ = writeln!(err, "error: --threads must be positive");
            return 2;
        }
        // Fails harmlessly if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match commands::dispatch(&cli) {
        Ok(outcome) => {
            let _ = if cli.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&outcome.json).expect("json"))
            } else {
                write!(out, "{}", outcome.text)
            };
            match outcome.failure {
                Some(msg) => {
                    let _ = writeln!(err, "check failed: {msg}");
                    1
                }
                None => 0,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
