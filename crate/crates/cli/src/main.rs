//! `tat`: distance fields, coverage checks, wave simulation, continuation
//! sets and reconstructions driven by JSON experiment configs.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;

#[derive(Parser)]
#[command(name = "tat", version, about = "Thermoacoustic tomography with partial boundary data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Travel-time field from the detectors or from point sources, with a Lipschitz check.
    Distance(RunArgs),
    /// Decide whether the detector patch sees every interior point in time.
    Coverage(RunArgs),
    /// Forward wave run; records the boundary traces.
    Simulate(RunArgs),
    /// Check that the exterior field vanishes on a domain of dependence.
    VerifyDod(RunArgs),
    /// Iterated unique-continuation sets around a cylinder.
    Uc(RunArgs),
    /// Landweber reconstruction from the recorded traces.
    Reconstruct(RunArgs),
    /// Collate reconstruction summaries from several configs.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Overrides as dotted `key=value` pairs; values are parsed as JSON.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment configs whose reconstructions are collated, plus
    /// `key=value` overrides applied to every config.
    #[arg(required = true, value_name = "CONFIG|KEY=VALUE")]
    items: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    /// An upstream command has not been run.
    Missing(String),
    /// A checked property failed.
    Invariant(String),
    Core(tat_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Missing(m) => write!(f, "missing input: {m}"),
            CliError::Invariant(m) => write!(f, "check failed: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<tat_core::Error> for CliError {
    fn from(e: tat_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// 1 for failed checks and numerical failures, 2 for everything the
    /// user has to fix before a run can start.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invariant(_) => 1,
            CliError::Core(tat_core::Error::BlowUp { .. } | tat_core::Error::Divergence { .. }) => 1,
            _ => 2,
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TAT_THREADS") else { return Ok(()) };
    let n: usize =
        raw.trim().parse().map_err(|_| CliError::Usage(format!("TAT_THREADS=`{raw}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("TAT_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let context = |a: &RunArgs| Context::new(config::load(&a.config, &a.overrides)?);
    match &cli.command {
        Command::Distance(a) => commands::distance(&context(a)?),
        Command::Coverage(a) => commands::coverage(&context(a)?),
        Command::Simulate(a) => commands::simulate_cmd(&context(a)?),
        Command::VerifyDod(a) => commands::verify_dod_cmd(&context(a)?),
        Command::Uc(a) => commands::uc(&context(a)?),
        Command::Reconstruct(a) => commands::reconstruct(&context(a)?),
        Command::Report(a) => {
            let (overrides, configs): (Vec<String>, Vec<String>) =
                a.items.iter().cloned().partition(|s| s.contains('='));
            if configs.is_empty() {
                return Err(CliError::Usage("report needs at least one config".into()));
            }
            let loaded = configs.iter().map(|p| config::load(p.as_ref(), &overrides)).collect::<Result<Vec<_>, _>>()?;
            commands::report(&loaded, &a.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
