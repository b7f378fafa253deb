//! `padbench`: simulate, analyse and replay PAD and trackpad pointing runs.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for bad input data.

mod analyze;
mod error;
mod inputs;
mod plotdata;
mod replay;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use padbench_core::pad::{DEFAULT_MAX_CANDIDATES, DEFAULT_RELEASE_WINDOW_MS};
use padbench_core::prediction::load_scenario;
use padbench_core::usersim::{calibrate, CalibrationTargets, SearchSpace};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "padbench",
    version,
    about = "PAD chord engine and pointing benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate runs and write one CSV log per run plus a manifest.
    Simulate(simulate::SimulateArgs),
    /// Summarise CSV logs grouped by condition.
    Analyze(analyze::AnalyzeArgs),
    /// Feed a recorded key-event log through the chord engine.
    Replay(ReplayArgs),
    /// Fit simulator parameters to the published summary statistics.
    Calibrate(CalibrateArgs),
    /// Check a scenario file against the schema.
    ScenarioValidate { file: PathBuf },
    /// Print the data series behind one of the standard figures (f6..f10) as CSV.
    Plotdata(plotdata::PlotdataArgs),
}

#[derive(clap::Args, Debug)]
pub struct ReplayArgs {
    /// Event log (`t_ms,key,edge`).
    pub file: PathBuf,
    /// Release window in milliseconds.
    #[arg(long, default_value_t = DEFAULT_RELEASE_WINDOW_MS)]
    pub window: u64,
    /// Number of suggestions the cycle key rotates through.
    #[arg(long, default_value_t = DEFAULT_MAX_CANDIDATES)]
    pub candidates: u32,
    /// Ignore `TIMEOUT` events; a late release is then only discarded when the
    /// second key comes up.
    #[arg(long)]
    pub no_timeout_discard: bool,
}

#[derive(clap::Args, Debug)]
struct CalibrateArgs {
    /// Seed for every simulated evaluation.
    #[arg(long)]
    seed: u64,
    /// Target statistics (defaults to the shipped reference targets).
    #[arg(long)]
    targets: Option<PathBuf>,
    /// Parameter grid and evaluation design (defaults to the shipped one).
    #[arg(long)]
    search: Option<PathBuf>,
    /// Where to write the fitted parameter file.
    #[arg(long, default_value = "params.json")]
    out: PathBuf,
}

fn run_calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let targets = match &args.targets {
        Some(path) => CalibrationTargets::from_json(&inputs::read_text(path)?)
            .map_err(|e| CliError::data(path, e))?,
        None => CalibrationTargets::reference(),
    };
    let search = match &args.search {
        Some(path) => SearchSpace::from_json(&inputs::read_text(path)?)
            .map_err(|e| CliError::data(path, e))?,
        None => SearchSpace::shipped(),
    };
    let result = calibrate(&targets, &search, args.seed)
        .map_err(|e| CliError::Data(format!("calibration: {e}")))?;
    inputs::write_text(&args.out, &result.params.to_json())?;
    print!("{}", result.render_text());
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_scenario_validate(file: &Path) -> Result<(), CliError> {
    let scenario = load_scenario(&inputs::read_text(file)?).map_err(|e| CliError::data(file, e))?;
    let targets: usize = scenario.screens.iter().map(|s| s.targets.len()).sum();
    println!(
        "ok: {} screens, {} targets, start `{}`",
        scenario.screens.len(),
        targets,
        scenario.start
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Analyze(args) => analyze::run(&args),
        Command::Replay(args) => replay::run(&args),
        Command::Calibrate(args) => run_calibrate(&args),
        Command::ScenarioValidate { file } => run_scenario_validate(&file),
        Command::Plotdata(args) => plotdata::run(&args),
    }
}

/// Used by `--format`.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("padbench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
