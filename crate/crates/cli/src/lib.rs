//! Command-line front end: parses arguments or a config file, runs one
//! experiment and emits its report.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numeric or I/O failure,
//! 3 inconclusive headline verdict under `--strict-verdict`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod config;
pub mod exec;
pub mod report;

use std::ffi::OsString;
use std::fmt;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use cyclicity::criterion::Verdict;

use crate::args::Cli;
pub use crate::config::{CommandConfig, ExperimentConfig, OutputConfig};
pub use crate::report::{emit_report, parse_report, Format, RunReport};

/// Thread-count override for the global pool.
pub const THREADS_ENV: &str = "CYCLICITY_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) | CliError::Io(_) => EXIT_NUMERIC,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "I/O failure: {m}"),
        }
    }
}

impl From<cyclicity::Error> for CliError {
    fn from(e: cyclicity::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Result of one invocation.  `stdout` is empty when the report went to a file.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub report: Option<RunReport>,
}

/// Parses `argv` (program name first), runs the experiment and writes the
/// report to `--output` if given.  Diagnostics go to standard error.
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: EXIT_OK, stdout: e.to_string().into_bytes(), report: None }
                }
                _ => {
                    eprint!("{}", e.render());
                    Outcome { code: EXIT_USAGE, stdout: Vec::new(), report: None }
                }
            };
        }
    };
    let strict = cli.strict_verdict;
    match run(cli) {
        Ok((stdout, report)) => {
            let inconclusive = report.verdict.as_ref().and_then(|v| v.headline) == Some(Verdict::Inconclusive);
            let code = if strict && inconclusive {
                eprintln!("headline verdict is inconclusive");
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            Outcome { code, stdout, report: Some(report) }
        }
        Err(e) => {
            eprintln!("error: {e}");
            Outcome { code: e.exit_code(), stdout: Vec::new(), report: None }
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn resolve(cli: Cli) -> Result<(ExperimentConfig, bool), CliError> {
    let mut cfg = match (cli.config, cli.command) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --config or a subcommand, not both".into())),
        (None, None) => return Err(CliError::Usage("no subcommand given; see --help".into())),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        (None, Some(cmd)) => ExperimentConfig { run: cmd.into_config(), output: OutputConfig::default() },
    };
    if let Some(p) = cli.output {
        cfg.output.path = Some(p.to_string_lossy().into_owned());
    }
    if cli.format.is_some() {
        cfg.output.format = cli.format;
    }
    let cfg = cfg.canonical()?;
    if let Some(p) = cli.save_config {
        std::fs::write(&p, cfg.to_json()?).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok((cfg, cli.timing))
}

fn run(cli: Cli) -> Result<(Vec<u8>, RunReport), CliError> {
    configure_threads()?;
    let (cfg, timing) = resolve(cli)?;
    let start = Instant::now();
    let outcome = exec::execute(&cfg.run)?;
    let elapsed = start.elapsed().as_secs_f64();
    let report = RunReport {
        command: cfg.run.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: cfg.run.hash()?,
        config: cfg.run.clone(),
        payload: outcome.payload,
        timing_seconds: timing.then(|| report::quantize(elapsed)),
        verdict: outcome.verdict,
    };
    let bytes = emit_report(&report, cfg.format())?;
    match &cfg.output.path {
        Some(p) => {
            std::fs::write(p, &bytes).map_err(|e| CliError::Io(format!("{p}: {e}")))?;
            Ok((Vec::new(), report))
        }
        None => Ok((bytes, report)),
    }
}
