use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use padbench_core::metrics::{export_csv, format_float};
use padbench_core::pad::DEFAULT_RELEASE_WINDOW_MS;
use padbench_core::prediction::AccuracyProfile;
use padbench_core::taskgen::{DEFAULT_TRIALS, DEFAULT_WIDTH_PX};
use padbench_core::usersim::{
    simulate_block, BlockSpec, RunOptions, SimCondition, SimParams, DEFAULT_LEARNING,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::inputs::{read_text, write_text};

/// Consulted when `--params` is not given.
pub const PARAMS_ENV: &str = "PADBENCH_PARAMS";

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeviceArg {
    Pad,
    Trackpad,
}

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "from_manifest")]
    pub device: Option<DeviceArg>,
    /// Prediction accuracy for PAD runs: `ideal`, `uniform3`, or a JSON file
    /// holding `{"name": ..., "p": [...]}`.
    #[arg(long)]
    pub profile: Option<String>,
    /// Indices of difficulty in bits, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    pub ids: Vec<f64>,
    /// Trials per run.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: usize,
    /// Runs per ID.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Target width in pixels.
    #[arg(long, default_value_t = DEFAULT_WIDTH_PX)]
    pub width: f64,
    #[arg(long, required_unless_present = "from_manifest")]
    pub seed: Option<u64>,
    /// Simulator parameter file. Falls back to $PADBENCH_PARAMS, then to the
    /// shipped calibration.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// PAD release window in milliseconds.
    #[arg(long, default_value_t = DEFAULT_RELEASE_WINDOW_MS)]
    pub window: u64,
    /// Warm-up slowdown of the first trial (decays to none by trial 6).
    #[arg(long, default_value_t = DEFAULT_LEARNING)]
    pub learning: f64,
    /// Disable the warm-up slowdown entirely.
    #[arg(long, conflicts_with = "learning")]
    pub no_learning: bool,
    /// Re-run exactly the configuration recorded in a previous manifest.
    #[arg(long, conflicts_with_all = [
        "device", "profile", "ids", "trials", "runs", "width", "seed", "params",
        "window", "learning", "no_learning",
    ])]
    pub from_manifest: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long = "out-dir", visible_alias = "out")]
    pub out_dir: PathBuf,
}

/// Everything that determines the output bytes. Round-trips through the
/// manifest.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
struct SimulateConfig {
    condition: SimCondition,
    ids: Vec<f64>,
    trials_per_run: usize,
    runs_per_id: usize,
    width_px: f64,
    seed: u64,
    learning: Option<f64>,
    params_source: String,
    params: SimParams,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    generator: String,
    config: SimulateConfig,
    runs: Vec<ManifestRun>,
}

const MANIFEST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ManifestRun {
    file: String,
    run_id: String,
    seed: u64,
    trials: usize,
}

fn resolve_profile(spec: &str) -> Result<AccuracyProfile, CliError> {
    if let Some(p) = AccuracyProfile::preset(spec) {
        return Ok(p);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "unknown profile `{spec}`; expected one of {} or a JSON profile file",
            AccuracyProfile::PRESET_NAMES.join(", ")
        )));
    }
    let profile: AccuracyProfile =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::data(path, e))?;
    check_profile_name(&profile).map_err(|e| CliError::data(path, e))?;
    Ok(profile)
}

/// The name ends up in file names and CSV metadata.
fn check_profile_name(profile: &AccuracyProfile) -> Result<(), String> {
    let name = profile.name();
    if name.is_empty()
        || !name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(format!(
            "profile name `{name}` must be non-empty ASCII letters, digits, `_` or `-`"
        ));
    }
    Ok(())
}

fn resolve_params(flag: Option<&PathBuf>) -> Result<(SimParams, String), CliError> {
    let path = match flag {
        Some(p) => Some(p.clone()),
        None => std::env::var_os(PARAMS_ENV).map(PathBuf::from),
    };
    match path {
        Some(p) => {
            let params =
                SimParams::from_json(&read_text(&p)?).map_err(|e| CliError::data(&p, e))?;
            Ok((params, p.display().to_string()))
        }
        None => Ok((SimParams::shipped(), "shipped".to_string())),
    }
}

fn condition_for(args: &SimulateArgs) -> Result<SimCondition, CliError> {
    let device = args.device.expect("clap requires --device");
    let mut condition = match (device, &args.profile) {
        (DeviceArg::Trackpad, None) => SimCondition::trackpad(),
        (DeviceArg::Trackpad, Some(_)) => {
            return Err(CliError::Usage(
                "--profile only applies to --device pad".into(),
            ))
        }
        (DeviceArg::Pad, None) => {
            return Err(CliError::Usage("--device pad needs --profile".into()))
        }
        (DeviceArg::Pad, Some(spec)) => SimCondition::pad(resolve_profile(spec)?),
    };
    condition.release_window_ms = args.window;
    Ok(condition)
}

fn config_from_args(args: &SimulateArgs) -> Result<SimulateConfig, CliError> {
    if args.ids.is_empty() || args.runs == 0 || args.trials == 0 {
        return Err(CliError::Usage(
            "--ids, --runs and --trials must be non-empty".into(),
        ));
    }
    if !(args.learning.is_finite() && args.learning >= 0.0) {
        return Err(CliError::Usage(
            "--learning must be a non-negative number".into(),
        ));
    }
    let condition = condition_for(args)?;
    let (params, params_source) = resolve_params(args.params.as_ref())?;
    Ok(SimulateConfig {
        condition,
        ids: args.ids.clone(),
        trials_per_run: args.trials,
        runs_per_id: args.runs,
        width_px: args.width,
        seed: args.seed.expect("clap requires --seed"),
        learning: (!args.no_learning).then_some(args.learning),
        params_source,
        params,
    })
}

fn config_from_manifest(path: &Path) -> Result<SimulateConfig, CliError> {
    let manifest: Manifest =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::data(path, e))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(CliError::data(
            path,
            format!("unsupported manifest version {}", manifest.version),
        ));
    }
    let config = manifest.config;
    config
        .params
        .validate()
        .map_err(|e| CliError::data(path, e))?;
    if let Some(profile) = &config.condition.profile {
        check_profile_name(profile).map_err(|e| CliError::data(path, e))?;
    }
    Ok(config)
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let config = match &args.from_manifest {
        Some(path) => config_from_manifest(path)?,
        None => config_from_args(args)?,
    };
    let block = BlockSpec {
        ids: config.ids.clone(),
        runs_per_id: config.runs_per_id,
        n_trials: config.trials_per_run,
        width_px: config.width_px,
    };
    let options = RunOptions {
        learning: config.learning,
    };
    let logs = simulate_block(
        &config.condition,
        &block,
        &config.params,
        config.seed,
        options,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let out = &args.out_dir;
    fs::create_dir_all(out).map_err(|e| CliError::data(out, e))?;
    let mut runs = Vec::with_capacity(logs.len());
    for log in &logs {
        let file = format!("{}.csv", log.header.run_id);
        let csv = export_csv(log).map_err(|e| CliError::Data(e.to_string()))?;
        write_text(&out.join(&file), &csv)?;
        runs.push(ManifestRun {
            file,
            run_id: log.header.run_id.clone(),
            seed: log.header.seed,
            trials: log.records.len(),
        });
    }

    let name = config.condition.name();
    let ids: Vec<String> = config.ids.iter().map(|&id| format_float(id)).collect();
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        generator: format!("padbench {}", env!("CARGO_PKG_VERSION")),
        config,
        runs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("plain data");
    text.push('\n');
    // Per condition, so several conditions can share one directory.
    write_text(&out.join(format!("{name}.manifest.json")), &text)?;

    println!(
        "wrote {} runs of {} (IDs {}) to {}",
        logs.len(),
        name,
        ids.join(","),
        out.display()
    );
    Ok(())
}
