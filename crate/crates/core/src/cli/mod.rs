//! Command-line driver: `hardytime <experiment> --config PATH [overrides]`.
//!
//! Every run writes a data file (CSV or JSON) and a JSON manifest next to it.
//! Exit codes: 0 success, 2 configuration error, 3 invariant failure.

pub mod config;
pub mod experiments;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::Execution;
use config::{ConfigError, ExperimentName, Format, Overrides, RunConfig};
use output::{manifest_path, write_manifest, Manifest, Versions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hardytime", version, about = "Time observables on discrete Hardy spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues and time coordinates of the inverse time observable.
    Spectrum(RunArgs),
    /// Spectral flow of a wave packet across ξ([1, a)).
    Flow(RunArgs),
    /// Hardy-space norm flows n±(t) and their Toeplitz semigroup counterparts.
    Normflow(RunArgs),
    /// Norms of resolvent kernels and their pullbacks.
    Xmu(RunArgs),
    /// Forward intertwining residuals against the wrong-side residuals.
    Intertwine(RunArgs),
    /// Characteristic-function intertwining on the defect subspaces.
    Characteristic(RunArgs),
    /// Truncated Fock space identities.
    FockCheck(RunArgs),
    /// Euler integration of the unitary stochastic equation on both sides.
    Qsde(RunArgs),
}

impl Command {
    fn parts(&self) -> (ExperimentName, &RunArgs) {
        match self {
            Command::Spectrum(a) => (ExperimentName::Spectrum, a),
            Command::Flow(a) => (ExperimentName::Flow, a),
            Command::Normflow(a) => (ExperimentName::Normflow, a),
            Command::Xmu(a) => (ExperimentName::Xmu, a),
            Command::Intertwine(a) => (ExperimentName::Intertwine, a),
            Command::Characteristic(a) => (ExperimentName::Characteristic, a),
            Command::FockCheck(a) => (ExperimentName::FockCheck, a),
            Command::Qsde(a) => (ExperimentName::Qsde, a),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Data file; the manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Grid size override.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub halfwidth: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            halfwidth: self.halfwidth,
            a: self.a,
            tmax: self.tmax,
            steps: self.steps,
            format: self.format,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    status: &'a str,
    exit_code: i32,
    message: String,
}

fn report(status: &str, exit_code: i32, message: String) -> i32 {
    let r = ErrorReport { status, exit_code, message };
    eprintln!("{}", serde_json::to_string(&r).expect("plain struct serializes"));
    exit_code
}

/// Parses arguments, runs the experiment and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => return report("usage-error", EXIT_CONFIG, e.kind().to_string() + ": " + e.to_string().trim()),
    };
    let (name, args) = cli.command.parts();
    let config = match load(name, args) {
        Ok(c) => c,
        Err(e) => return report("config-error", EXIT_CONFIG, e.to_string()),
    };
    run(&config, Execution::default())
}

fn load(name: ExperimentName, args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::from_path(&args.config)?;
    if config.experiment != name {
        return Err(ConfigError::ExperimentMismatch { requested: name.as_str().into(), found: config.experiment.as_str().into() });
    }
    config.apply(&args.overrides())?;
    Ok(config)
}

/// Runs a validated configuration, writing the data file and manifest.
pub fn run(config: &RunConfig, exec: Execution) -> i32 {
    let outcome = match experiments::run_experiment(config, exec) {
        Ok(o) => o,
        Err(e) if experiments::is_config_error(&e) => return report("config-error", EXIT_CONFIG, e.to_string()),
        Err(e) => return report("invariant-failure", EXIT_INVARIANT, e.to_string()),
    };
    let path = config.output_path();
    if let Err(e) = outcome.table.write(&path, config.format) {
        return report("io-error", EXIT_CONFIG, format!("cannot write {}: {e}", path.display()));
    }
    let passed = outcome.passed();
    let manifest = Manifest {
        experiment: config.experiment.as_str(),
        config,
        versions: Versions::default(),
        parallel: exec.is_parallel(),
        output: path.display().to_string(),
        columns: &outcome.table.columns,
        rows: outcome.table.rows.len(),
        tolerances: experiments::tolerances(config.experiment),
        invariants: &outcome.invariants,
        diagnostics: &outcome.diagnostics,
        passed,
    };
    let mpath = manifest_path(&path);
    if let Err(e) = write_manifest(&mpath, &manifest) {
        return report("io-error", EXIT_CONFIG, format!("cannot write {}: {e}", mpath.display()));
    }
    if passed {
        EXIT_OK
    } else {
        let failed: Vec<&str> = outcome.invariants.iter().filter(|i| !i.passed).map(|i| i.name.as_str()).collect();
        report("invariant-failure", EXIT_INVARIANT, format!("failed invariants: {}", failed.join(", ")))
    }
}
