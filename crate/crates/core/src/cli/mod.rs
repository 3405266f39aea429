//! Command-line interface: `train`, `predict`, `cv`, `gridsearch`, `noise`
//! and `stats`.
//!
//! Exit codes: 0 on success, 1 on data or runtime errors, 2 on usage errors.
//! Relative `--data` / `--table` paths that do not exist are looked up in the
//! directory named by `IFBLS_DATA_DIR`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::data::DataError;
use crate::eval::EvalError;
use crate::network::{EnhancementActivation, FeatureActivation};
use crate::scoring::intuitionistic::Epsilon;
use crate::stats::StatsError;
use crate::trainer::{ModelFileError, TrainError, VariantKind};

mod commands;
pub mod config;
pub mod manifest;
pub mod report;

pub const DATA_DIR_ENV: &str = "IFBLS_DATA_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ifbls", version, about = "Broad learning system classifiers and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a labelled CSV and save it.
    Train(TrainArgs),
    /// Predict labels for a feature CSV with a saved model.
    Predict(PredictArgs),
    /// k-fold cross-validation of one configuration.
    Cv(CvArgs),
    /// Cross-validate every configuration of a grid.
    Gridsearch(GridArgs),
    /// Corrupt a dataset with per-sample Gaussian feature noise.
    Noise(NoiseArgs),
    /// Ranks, Friedman, Wilcoxon and win-tie-loss from an accuracy table.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Labelled dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Label column, by header name or 0-based index (default: last column).
    #[arg(long)]
    pub label: Option<String>,
    /// The CSV has no header row.
    #[arg(long)]
    pub no_header: bool,
}

fn parse_feature_activation(s: &str) -> Result<FeatureActivation, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown feature activation '{s}' (linear, tanh, sigmoid)"))
}

fn parse_enhancement_activation(s: &str) -> Result<EnhancementActivation, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown enhancement activation '{s}' (tanh, sigmoid, relu)"))
}

/// Network settings shared by every model-building command.
#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    /// Number of feature groups.
    #[arg(long)]
    pub m: Option<usize>,
    /// Nodes per feature group.
    #[arg(long)]
    pub p: Option<usize>,
    /// Number of enhancement groups.
    #[arg(long)]
    pub l: Option<usize>,
    /// Nodes per enhancement group.
    #[arg(long)]
    pub q: Option<usize>,
    /// Seed for the random layer weights.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_feature_activation)]
    pub feature_activation: Option<FeatureActivation>,
    #[arg(long, value_parser = parse_enhancement_activation)]
    pub enhancement_activation: Option<EnhancementActivation>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// bls, f-bls or if-bls.
    #[arg(long)]
    pub variant: Option<VariantKind>,
    /// Regularisation weight C.
    #[arg(long = "C")]
    pub c_reg: Option<f64>,
    #[command(flatten)]
    pub network: NetworkArgs,
    /// Gaussian kernel width (if-bls).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Membership offset delta (f-bls, if-bls).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Neighbourhood radius in kernel space, or "median" (if-bls).
    #[arg(long)]
    pub epsilon: Option<Epsilon>,
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ModelArgs {
    fn overrides(&self) -> config::ModelOverrides {
        config::ModelOverrides {
            variant: self.variant,
            c_reg: self.c_reg,
            m: self.network.m,
            p: self.network.p,
            l: self.network.l,
            q: self.network.q,
            seed: self.network.seed,
            feature_activation: self.network.feature_activation,
            enhancement_activation: self.network.enhancement_activation,
            mu: self.mu,
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Saved model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Feature CSV to label.
    #[arg(long)]
    pub data: PathBuf,
    /// The CSV has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Column to ignore, e.g. a label column left in the file.
    #[arg(long)]
    pub drop_column: Option<String>,
    /// Predictions CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FoldArgs {
    /// Number of folds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed of the fold shuffle.
    #[arg(long)]
    pub fold_seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub folds: FoldArgs,
    /// Per-fold results CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// bls, f-bls or if-bls.
    #[arg(long)]
    pub variant: Option<VariantKind>,
    /// "paper" for the built-in sweep, or a TOML grid file.
    #[arg(long)]
    pub grid: String,
    #[command(flatten)]
    pub network: NetworkArgs,
    #[command(flatten)]
    pub folds: FoldArgs,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Print the number of configurations and exit.
    #[arg(long)]
    pub dry_run: bool,
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One row per configuration.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_level(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 100]"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Percentage of samples to corrupt, 0 to 100.
    #[arg(long, value_parser = parse_level)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupted CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Accuracy table: header "dataset,<model>,...", one row per dataset.
    #[arg(long)]
    pub table: PathBuf,
    /// Directory for ranks.csv, friedman.csv, wilcoxon.csv,
    /// win_tie_loss.csv and report.md. Without it the report goes to stdout.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Accuracy differences up to this are ties.
    #[arg(long, default_value_t = 1e-4)]
    pub tie_tol: f64,
}

/// Resolves a relative input path against `IFBLS_DATA_DIR` when it does not
/// exist as given.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_owned()
}

/// Parses `argv` and runs the command. Help and version requests exit 0,
/// usage errors exit 2.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
