use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sepsim::commands::{self, CalibrateOptions, StartupMode};
use sepsim::{CliError, RunConfig};

/// Start-up reliability analysis for SRAM PUFs: separatrix-distance Monte
/// Carlo, start-up probability emulation, logistic transfer fitting,
/// reliability thresholds and PUF quality metrics.
#[derive(Parser)]
#[command(name = "sepsim", version, about)]
struct Cli {
    /// JSON run configuration (defaults apply for missing keys).
    #[arg(long, global = true, env = "SEPSIM_CONFIG")]
    config: Option<PathBuf>,

    /// Master seed override; all randomness flows from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Flip-search bisection tolerance override, V.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct PopulationArgs {
    /// Population size (default: rows * cols from the config).
    #[arg(long)]
    cells: Option<usize>,
    /// Mismatch sigma override applied to both polarities, V.
    #[arg(long)]
    sigma_vth: Option<f64>,
}

#[derive(Args)]
struct StartupArgs {
    /// Ingest a measured dataset (counts CSV or bitmap) instead of simulating.
    #[arg(long)]
    ingest: Option<PathBuf>,
    /// Trials per cell override.
    #[arg(long)]
    trials: Option<u32>,
    /// Initial-condition noise sigma override, V.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Simulated dataset size override (emits a 1 x N dataset).
    #[arg(long)]
    cells: Option<usize>,
    /// Mismatch sigma override applied to both polarities, V.
    #[arg(long)]
    sigma_vth: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// SD records CSV (from `population`).
    #[arg(long)]
    sd: PathBuf,
    /// Start-up dataset: counts CSV or bitmap (from `startup` or measured).
    #[arg(long)]
    sup: PathBuf,
    /// Fit objective: quantile | histogram.
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args)]
struct ThresholdsArgs {
    /// Fitted transfer model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated repeat probabilities.
    #[arg(long, default_value = "0.99,0.98,0.95", value_delimiter = ',')]
    probabilities: Vec<f64>,
    /// SD records CSV for the cell-fraction column.
    #[arg(long)]
    sd: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Response CSV files (each row is one chip response).
    #[arg(required = true)]
    responses: Vec<PathBuf>,
    /// Repeated responses of the first chip, for reliability.
    #[arg(long)]
    repeats: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Target fraction of cells inside (-sd-width, sd-width).
    #[arg(long, default_value_t = 0.906)]
    target_sd_mass: f64,
    /// Central SD window half-width, V.
    #[arg(long, default_value_t = 0.04)]
    sd_width: f64,
    /// Target B-region mass of the emulated SUP dataset.
    #[arg(long, default_value_t = 0.08)]
    target_b_mass: f64,
    /// Population size for the mismatch bisection.
    #[arg(long, default_value_t = 2048)]
    cal_cells: usize,
    /// Population size for the noise bisection.
    #[arg(long, default_value_t = 512)]
    sup_cells: usize,
    /// Trials per cell for the noise bisection.
    #[arg(long, default_value_t = 200)]
    sup_trials: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a mismatched population and sweep the separatrix distance.
    Population(PopulationArgs),
    /// Emulate noisy power-ups (or ingest measurements) and report SUP stats.
    Startup(StartupArgs),
    /// Fit the logistic transfer functions from SD and SUP data.
    Fit(FitArgs),
    /// Invert a fitted model into SD thresholds and cell fractions.
    Thresholds(ThresholdsArgs),
    /// PUF quality metrics over response files.
    Metrics(MetricsArgs),
    /// Calibrate mismatch and noise sigmas against the distribution targets.
    Calibrate(CalibrateArgs),
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(tol) = cli.tol {
        config.bisection_tol = tol;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out.clone();
    let workers = cli.workers.unwrap_or(0);
    match &cli.command {
        Command::Population(args) => {
            let mut config = load_config(&cli)?;
            if let Some(sigma) = args.sigma_vth {
                config.mismatch.sigma_vth_n = sigma;
                config.mismatch.sigma_vth_p = sigma;
            }
            config.validate()?;
            commands::cmd_population(&config, &out, args.cells, workers)
        }
        Command::Startup(args) => {
            let mut config = load_config(&cli)?;
            if let Some(trials) = args.trials {
                config.n_trials = trials;
            }
            if let Some(sigma) = args.noise_sigma {
                config.noise.sigma_init = sigma;
            }
            if let Some(sigma) = args.sigma_vth {
                config.mismatch.sigma_vth_n = sigma;
                config.mismatch.sigma_vth_p = sigma;
            }
            config.validate()?;
            let mode = match &args.ingest {
                Some(path) => StartupMode::Ingest { path: path.clone() },
                None => StartupMode::Simulate { cells: args.cells },
            };
            commands::cmd_startup(&config, &out, mode, workers)
        }
        Command::Fit(args) => {
            let config = load_config(&cli)?;
            commands::cmd_fit(&config, &out, &args.sd, &args.sup, args.objective.clone())
        }
        Command::Thresholds(args) => {
            let config = load_config(&cli)?;
            commands::cmd_thresholds(&config, &out, &args.model, &args.probabilities, &args.sd)
        }
        Command::Metrics(args) => cmd_metrics_wrapper(args, &out),
        Command::Calibrate(args) => {
            let config = load_config(&cli)?;
            let opts = CalibrateOptions {
                target_sd_mass: args.target_sd_mass,
                sd_width: args.sd_width,
                target_b_mass: args.target_b_mass,
                cal_cells: args.cal_cells,
                sup_cells: args.sup_cells,
                sup_trials: args.sup_trials,
            };
            commands::cmd_calibrate(&config, &out, &opts, workers)
        }
    }
}

fn cmd_metrics_wrapper(args: &MetricsArgs, out: &std::path::Path) -> Result<(), CliError> {
    commands::cmd_metrics(out, &args.responses, args.repeats.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
