//! `qrg`: RG flow, concurrence dynamics and peak-time scaling of the
//! transverse-field Ising chain as deterministic CSV/JSON datasets.
//!
//! Every dataset written to a directory is paired with
//! `<command>.manifest.json`, whose `config` block is valid `--config` input
//! and reproduces the same bytes.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::Options;
pub use output::{Report, OUT_DIR_ENV};

/// Bad input: flags, config, ranges or paths. Exit code 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

/// Oracle breach or overflow. Exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Numerical(pub String);

impl fmt::Display for Numerical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Numerical {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qrg",
    version,
    about = "Quantum RG entanglement dynamics of the transverse-field Ising chain"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Renormalized couplings and their field derivatives per RG step
    Flow(Options),
    /// Concurrence versus field at fixed time, or versus time at fixed field
    Dynamics(Options),
    /// Time and height of the k-th concurrence maximum
    Peaks(Options),
    /// dT_max/dg over a field range
    Derivative(Options),
    /// Exponent fits of the dT_max/dg minimum against system size
    Scaling(Options),
    /// Finite-size collapse of dT_max/dg curves
    Collapse(Options),
    /// Run every oracle suite and report the largest residuals
    Verify(Options),
}

impl Command {
    pub fn options(&self) -> &Options {
        match self {
            Command::Flow(o)
            | Command::Dynamics(o)
            | Command::Peaks(o)
            | Command::Derivative(o)
            | Command::Scaling(o)
            | Command::Collapse(o)
            | Command::Verify(o) => o,
        }
    }
}

/// Runs a command on options already merged with any config file.
pub fn run(command: &Command, options: &Options) -> anyhow::Result<Report> {
    match command {
        Command::Flow(_) => commands::flow(options),
        Command::Dynamics(_) => commands::dynamics(options),
        Command::Peaks(_) => commands::peaks(options),
        Command::Derivative(_) => commands::derivative(options),
        Command::Scaling(_) => commands::scaling(options),
        Command::Collapse(_) => commands::collapse(options),
        Command::Verify(_) => commands::verify(options),
    }
}

/// Exit code for an error: 2 for numerical failures, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<qrg_core::Error>() {
            return if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_VALIDATION
            };
        }
        if cause.is::<Numerical>() {
            return EXIT_NUMERICAL;
        }
        if cause.is::<Invalid>() {
            return EXIT_VALIDATION;
        }
    }
    EXIT_VALIDATION
}

/// Resolves options, runs, writes output, and reports errors on `err`.
/// `env_out` is the value of [`OUT_DIR_ENV`], if set.
pub fn execute(cli: &Cli, env_out: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match try_execute(cli, env_out, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn try_execute(cli: &Cli, env_out: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<()> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let options = cli.command.options().clone().resolve_file()?;
    let report = run(&cli.command, &options)?;
    let duration = clock.elapsed();

    for w in &report.warnings {
        writeln!(err, "warning: {w}")?;
    }
    match output::output_dir(options.out.as_deref(), env_out) {
        Some(dir) => {
            let manifest = output::Manifest::new(&report, started, duration);
            output::write_dir(&dir, &report, &manifest)?;
            out.write_all(report.console.as_bytes())?;
        }
        None if report.console.is_empty() => output::write_streams(&report, out, err)?,
        None => out.write_all(report.console.as_bytes())?,
    }
    if let Some(failure) = report.failure {
        return Err(Numerical(failure).into());
    }
    Ok(())
}
