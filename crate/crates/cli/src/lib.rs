//! `netrel` command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
pub mod config;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] netrel::Error),
}

impl CliError {
    /// 2 usage, 3 data or validation, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 3,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(netrel::Error::InvalidArgument(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "netrel",
    version,
    about = "Seismic two-terminal reliability of transportation networks"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub network: Option<PathBuf>,
    #[arg(long, global = true)]
    pub bridges: Option<PathBuf>,
    #[arg(long, global = true)]
    pub fragility: Option<PathBuf>,
    #[arg(long, global = true)]
    pub gmpe: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Defaults to NETREL_WORKERS, then 1.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    /// Flags, then config file, then NETREL_WORKERS.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let flags = RunConfig {
            network: self.network.clone(),
            bridges: self.bridges.clone(),
            fragility: self.fragility.clone(),
            gmpe: self.gmpe.clone(),
            epicenter: None,
            seed: self.seed,
            workers: self.workers,
            output_dir: self.out_dir.clone(),
        };
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let mut cfg = flags.or(file);
        if cfg.workers.is_none() {
            if let Ok(v) = std::env::var("NETREL_WORKERS") {
                let w = v.trim().parse().map_err(|_| {
                    CliError::Usage(format!("NETREL_WORKERS={v:?} is not a worker count"))
                })?;
                cfg.workers = Some(w);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args, Clone)]
pub struct MagnitudeArgs {
    /// Scenario earthquake magnitude.
    #[arg(long, conflicts_with = "magnitude_dist")]
    pub magnitude: Option<f64>,
    /// Truncated-exponential magnitude distribution, JSON {"beta","m_min","m_max"}.
    #[arg(long)]
    pub magnitude_dist: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of expected two-terminal connectivity.
    Simulate(SimulateArgs),
    /// Train a classifier or end-to-end surrogate.
    Train(TrainArgs),
    /// Predict expected connectivity with an end-to-end surrogate.
    Predict(PredictArgs),
    /// One-at-a-time bridge retrofit ranking.
    Sensitivity(SensitivityArgs),
    /// Exact reliability by state enumeration.
    Exact(ExactArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub magnitude: MagnitudeArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Topology samples per sampled event.
    #[arg(long, default_value_t = 1000)]
    pub inner: u64,
    /// Sample lognormal ground-motion residuals at every bridge.
    #[arg(long)]
    pub residuals: bool,
    /// `dfs` or `classifier:<model file>`.
    #[arg(long, default_value = "dfs")]
    pub checker: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Classifier,
    E2e,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelWith {
    Classifier,
    Dfs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// Classifier: number of sampled magnitudes (default 10000).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Classifier: topology realizations per magnitude.
    #[arg(long, default_value_t = 1)]
    pub realizations: usize,
    /// End-to-end: number of sampled magnitudes (default 3000).
    #[arg(long)]
    pub magnitudes: Option<usize>,
    /// End-to-end: topology samples per magnitude (default 100000).
    #[arg(long)]
    pub topologies: Option<u64>,
    /// Default 150 for the classifier, 2000 for the end-to-end surrogate.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Learning rate in the last epoch as a fraction of --lr, decayed
    /// geometrically (default 1 for the classifier, 0.03 for the
    /// end-to-end surrogate).
    #[arg(long)]
    pub lr_final: Option<f64>,
    /// Comma-separated hidden-layer widths.
    #[arg(long)]
    pub hidden: Option<String>,
    /// Classifier: sample ground-motion residuals when generating data.
    #[arg(long)]
    pub residuals: bool,
    /// End-to-end: generate data without ground-motion residuals.
    #[arg(long, conflicts_with = "residual_fraction")]
    pub no_residuals: bool,
    /// End-to-end: share of training events that carry ground-motion
    /// residuals; the rest use median motions.
    #[arg(long, default_value_t = 0.5)]
    pub residual_fraction: f64,
    /// Classifier: add failed rows derived from disconnected samples.
    #[arg(long)]
    pub augment: bool,
    /// End-to-end: trained classifier model used to label realizations.
    #[arg(long)]
    pub classifier: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "classifier")]
    pub label_with: LabelWith,
    /// End-to-end: uniform magnitude range of the training events.
    #[arg(long, default_value_t = 6.5)]
    pub mag_lo: f64,
    #[arg(long, default_value_t = 8.0)]
    pub mag_hi: f64,
    /// Also write the generated training rows as CSV.
    #[arg(long)]
    pub dataset_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub magnitude: MagnitudeArgs,
    #[arg(long, default_value_t = 1)]
    pub events: u64,
    #[arg(long)]
    pub residuals: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    McDfs,
    E2e,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[arg(long, default_value_t = 0.10)]
    pub amplification: f64,
    #[arg(long, value_enum, default_value = "mc-dfs")]
    pub estimator: EstimatorKind,
    /// End-to-end model, required with `--estimator e2e`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Defaults to the truncated exponential with beta 0.76 on [7.3, 7.9].
    #[command(flatten)]
    pub magnitude: MagnitudeArgs,
    #[arg(long, default_value_t = 100)]
    pub events: u64,
    /// Topology samples per event for `mc-dfs`.
    #[arg(long, default_value_t = 10_000)]
    pub inner: u64,
    #[arg(long)]
    pub residuals: bool,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Comma-separated roadway survival probabilities.
    #[arg(long, conflicts_with = "magnitude")]
    pub probs: Option<String>,
    /// Derive roadway probabilities from the scenario at this magnitude.
    #[arg(long)]
    pub magnitude: Option<f64>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.common.resolve()?;
    match cli.command {
        Command::Simulate(a) => commands::simulate(&cfg, &a),
        Command::Train(a) => commands::train(&cfg, &a),
        Command::Predict(a) => commands::predict(&cfg, &a),
        Command::Sensitivity(a) => commands::sensitivity(&cfg, &a),
        Command::Exact(a) => commands::exact(&cfg, &a),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
