//! The `qftlab` command-line driver.
//!
//! Every command reads one [`ExperimentConfig`], writes `report.jsonl` and
//! `summary.csv` into the output directory and maps its outcome to an exit
//! code: 0 all suites pass, 1 some suite fails, 2 bad configuration or
//! arguments, 3 a numerical-health failure.

pub mod commands;
pub mod config;
pub mod emit;

use std::path::{Path, PathBuf};

use clap::ValueEnum;

pub use commands::Outcome;
pub use config::{ConfigError, ExperimentConfig};
pub use emit::{emit_report, parse_records, record_line, Record, REPORT_FILE, SUMMARY_FILE, SUMMARY_HEADER};

use crate::error::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_SUITE_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "QFTLAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Draw weighted ensembles and write them to disk.
    Sample,
    /// Monte Carlo characteristic functionals of the lifted corpus.
    Charfunc,
    /// Full convergence report along the scale schedule.
    ScalingLimit,
    /// Reflection positivity on the sphere and of the scaled functionals.
    RpCheck,
    /// Translation and rotation errors, commutators and covariance drift.
    Invariance,
    /// Wick polynomial identities and moments.
    WickCheck,
    /// Trace, width, rotation commutation and strong convergence of the
    /// mollifiers.
    MollifierInfo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Charfunc => "charfunc",
            Command::ScalingLimit => "scaling-limit",
            Command::RpCheck => "rp-check",
            Command::Invariance => "invariance",
            Command::WickCheck => "wick-check",
            Command::MollifierInfo => "mollifier-info",
        }
    }

    /// Inverse of [`Command::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|c| c.name() == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(e) if e.is_numerical_health() => EXIT_NUMERICAL,
            // remaining library errors stem from the configured inputs
            CliError::Run(_) => EXIT_CONFIG,
        }
    }
}

/// Options shared by every command.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// A finished run: the outcome and every file written.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.outcome.pass() {
            EXIT_PASS
        } else {
            EXIT_SUITE_FAIL
        }
    }
}

/// Thread count from the flag, else the environment, else rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, ConfigError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| ConfigError {
            path: THREADS_ENV.into(),
            message: format!("not a thread count: {v:?}"),
        }),
        Err(_) => Ok(None),
    }
}

/// Runs a command on an already loaded configuration.
pub fn execute(command: Command, config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let outcome = match command {
        Command::Sample => commands::sample(config, out_dir)?,
        Command::Charfunc => commands::charfunc(config)?,
        Command::ScalingLimit => commands::scaling_limit(config)?,
        Command::RpCheck => commands::rp_check(config)?,
        Command::Invariance => commands::invariance(config)?,
        Command::WickCheck => commands::wick_check(config)?,
        Command::MollifierInfo => commands::mollifier_info(config)?,
    };
    let mut files = outcome.files.clone();
    files.extend(emit_report(&outcome.records, &outcome.verdicts, out_dir)?);
    Ok(RunReport { outcome, files })
}

/// Loads the configuration, applies overrides and runs the command.
pub fn run(command: Command, options: &RunOptions) -> Result<RunReport, CliError> {
    let mut config = ExperimentConfig::load(&options.config)?;
    if let Some(seed) = options.seed {
        config.experiment.seed = seed;
    }
    let threads = resolve_threads(options.threads)?;
    match threads {
        Some(0) => Err(ConfigError {
            path: "threads".into(),
            message: "must be at least 1".into(),
        })?,
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| execute(command, &config, &options.out_dir))
        }
        None => execute(command, &config, &options.out_dir),
    }
}

/// Number of `report.jsonl` lines a successful run of `command` writes.
pub fn expected_records(config: &ExperimentConfig, command: Command) -> usize {
    let e = &config.experiment;
    let k = e.k_list.len();
    let f = e.corpus.len();
    match command {
        Command::Sample => 2 * k,
        Command::Charfunc => k * f * if e.is_gaussian() { 2 } else { 1 },
        Command::ScalingLimit => {
            // rows, Cauchy pairs, then per scale: free field, four
            // invariance values, two per equicontinuity pair, three scalars
            k * f + k.saturating_sub(1) * f + k * (f + 4 * f + 2 * f.saturating_sub(1) + 3)
        }
        Command::RpCheck => 4 + 1 + k,
        Command::Invariance => k * 4 * f + k,
        Command::WickCheck => 5 + 3 * k,
        Command::MollifierInfo => 6 * k,
    }
}

#[cfg(test)]
mod tests;
