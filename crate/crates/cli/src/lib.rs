//! `robustbench` command-line pipeline:
//! synth → evaluate → spectrum → correlate → report.
//!
//! Exit codes: 0 success, 2 bad arguments or config, 3 I/O failure during
//! synthesis or reference generation, 4 evaluate, 5 spectrum, 6 correlate,
//! 7 report. Summaries go to stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

pub use config::RunConfig;

pub mod exit {
    pub const OK: i32 = 0;
    pub const ARGS: i32 = 2;
    pub const IO: i32 = 3;
    pub const EVALUATE: i32 = 4;
    pub const SPECTRUM: i32 = 5;
    pub const CORRELATE: i32 = 6;
    pub const REPORT: i32 = 7;
}

pub const THREADS_ENV: &str = "ROBUSTBENCH_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn args(message: impl Into<String>) -> Self {
        Self::new(exit::ARGS, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(exit::IO, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "robustbench", version, about = "Detector robustness under simulated acquisition challenges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize challenge sequences from reference sequences.
    Synth(SynthArgs),
    /// Score predictions against ground truth per challenge cell.
    Evaluate(EvaluateArgs),
    /// Average residual log-magnitude spectra per cell and per type.
    Spectrum(SpectrumArgs),
    /// Rank-correlate spectral change with detection performance.
    Correlate(CorrelateArgs),
    /// Bundle metrics, degradation, spectra and correlations.
    Report(ReportArgs),
    /// Split reference ids into train and test sets.
    Split(SplitArgs),
    /// Generate synthetic reference sequences with ground truth.
    GenRefs(GenRefsArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Plain-text key=value configuration; flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Directory with one subdirectory of frames per reference sequence.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// `all` or a comma list of type names or codes.
    #[arg(long)]
    pub types: Option<String>,
    /// `1-5`, `all` or a comma list.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub frame_rate: Option<String>,
    /// png or ppm.
    #[arg(long)]
    pub format: Option<String>,
    /// Haze focal point `x,y` in normalized coordinates.
    #[arg(long)]
    pub haze_focal: Option<String>,
    /// Ordered chain `type:level,...` applied to every reference.
    #[arg(long)]
    pub compose: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub manifest: Option<String>,
    /// Directory of `<ref_id>.txt` ground-truth files.
    #[arg(long)]
    pub gt: Option<String>,
    /// Directory of `<sequence>.txt` prediction files; the reference run is `<ref_id>_00_0.txt`.
    #[arg(long)]
    pub pred: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub iou: Option<String>,
    #[arg(long)]
    pub betas: Option<String>,
    /// Match boxes regardless of sign class.
    #[arg(long)]
    pub class_agnostic: bool,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Manifest written by `synth`; sequence paths are relative to it.
    #[arg(long)]
    pub manifest: Option<String>,
    /// Directory with the reference sequences.
    #[arg(long)]
    pub refs: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub frame_rate: Option<String>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// `stats.csv` written by `spectrum`.
    #[arg(long)]
    pub spectra: Option<String>,
    /// `metrics.csv` written by `evaluate`.
    #[arg(long)]
    pub metrics: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Add the challenge-free point to every series.
    #[arg(long)]
    pub include_level0: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Output directory of `evaluate`.
    #[arg(long)]
    pub evaluate: PathBuf,
    /// Output directory of `spectrum`.
    #[arg(long)]
    pub spectrum: PathBuf,
    /// Output directory of `correlate`.
    #[arg(long)]
    pub correlate: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Directory whose subdirectories name the ids.
    #[arg(long, conflicts_with = "ids")]
    pub input: Option<String>,
    /// Explicit comma list of ids.
    #[arg(long)]
    pub ids: Option<String>,
    #[arg(long)]
    pub ratio: Option<String>,
    /// shuffle or ordered.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenRefsArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub count: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
}

/// Loads `--config` and applies `(key, flag, value)` overrides.
pub(crate) fn resolve(config: &ConfigArg, overrides: &[(&str, &str, &Option<String>)]) -> CliResult<RunConfig> {
    let mut cfg = match &config.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for (key, flag, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| CliError::args(format!("--{flag}: {e}")))?;
        }
    }
    Ok(cfg)
}

pub(crate) fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    value.as_deref().ok_or_else(|| CliError::args(format!("missing --{flag}")))
}

/// Sizes the global rayon pool from `ROBUSTBENCH_THREADS` (0 or unset = auto).
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::args(format!("{THREADS_ENV}: expected a non-negative integer, got `{raw}`")))?;
    if n > 0 {
        // A second initialization in the same process keeps the first pool.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    Ok(())
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth::run(&a),
        Command::Evaluate(a) => commands::evaluate::run(&a),
        Command::Spectrum(a) => commands::spectrum::run(&a),
        Command::Correlate(a) => commands::correlate::run(&a),
        Command::Report(a) => commands::report::run(&a),
        Command::Split(a) => commands::tools::split(&a),
        Command::GenRefs(a) => commands::tools::gen_refs(&a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::ARGS } else { exit::OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
