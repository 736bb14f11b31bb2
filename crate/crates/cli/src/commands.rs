//! Subcommand implementations.
//!
//! Every command is a pure function of (config, arguments): all randomness
//! flows from the config seed through counter-based per-cell streams, and all
//! output files are written from index-ordered vectors, so reruns and
//! different worker counts produce byte-identical files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use sepsim_core::device::CellInstance;
use sepsim_core::metrics::{bit_aliasing, reliability, uniformity, uniqueness, PufResponse};
use sepsim_core::startup::{
    classify_regions, mean_ber, StartupDataset, REGION_HIGH_DEFAULT, REGION_LOW_DEFAULT,
};
use sepsim_core::transfer::{
    fit_double, fit_double_histogram, fit_single, fit_single_histogram, quantile_pairs, FitResult,
    TransferModel,
};
use sepsim_core::variation::{central_mass, exceedance, make_histogram, sample_cell};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats;
use crate::pipeline;

fn ensure_outdir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Io { path: out.display().to_string(), source: e })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    std::fs::write(path, text).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
}

fn sample_population_par(
    pool: &rayon::ThreadPool,
    config: &RunConfig,
    n: usize,
) -> Vec<CellInstance> {
    let nominal = config.nominal_cell();
    let spec = config.mismatch_spec();
    pool.install(|| {
        (0..n as u64)
            .into_par_iter()
            .map(|i| sample_cell(&nominal, &spec, config.seed, i))
            .collect()
    })
}

// ----------------------------------------------------------------- population

#[derive(Serialize)]
struct PopulationReport {
    n_cells: usize,
    seed: u64,
    sigma_vth_n: f64,
    sigma_vth_p: f64,
    sd_mean_volts: f64,
    sd_std_volts: f64,
    mass_within_0p04: f64,
    exceedance_0p03: f64,
    exceedance_0p04: f64,
    exceedance_0p05: f64,
    no_flip_cells: usize,
}

/// Sample a population, sweep SD, and emit the SD records, histogram and
/// exceedance curve.
pub fn cmd_population(
    config: &RunConfig,
    out: &Path,
    cells: Option<usize>,
    workers: usize,
) -> Result<(), CliError> {
    ensure_outdir(out)?;
    let n = cells.unwrap_or_else(|| config.cells());
    if n == 0 {
        return Err(CliError::Invalid("population size must be positive".into()));
    }
    let pool = pipeline::build_pool(workers);
    let population = sample_population_par(&pool, config, n);

    // per-cell mismatch dump
    let mut dump = String::from("cell_id,n1_dvth,n2_dvth,p1_dvth,p2_dvth,nx1_dvth,nx2_dvth\n");
    for c in &population {
        dump.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.cell_id,
            c.n1.vth_offset,
            c.n2.vth_offset,
            c.p1.vth_offset,
            c.p2.vth_offset,
            c.nx1.vth_offset,
            c.nx2.vth_offset
        ));
    }
    let dump_path = out.join("population.csv");
    std::fs::write(&dump_path, dump)
        .map_err(|e| CliError::Io { path: dump_path.display().to_string(), source: e })?;

    let env = config.environment();
    let ramp = config.ramp_spec()?;
    let sim = config.sim_params();
    let records = pipeline::sd_sweep_par(&pool, &population, &env, &ramp, &sim, config.bisection_tol);

    formats::write_sd_csv(&out.join("sd.csv"), &records)?;
    formats::write_sd_json(&out.join("sd.json"), &records)?;

    let sds: Vec<f64> = records.iter().map(|r| r.sd).collect();
    let h = &config.histogram;
    let histogram = make_histogram(&sds, h.sd_bins, (-h.sd_range, h.sd_range))?;
    formats::write_histogram_csv(&out.join("sd_histogram.csv"), &histogram)?;

    let mut points = Vec::new();
    let steps = (h.exceedance_max / h.exceedance_step).round() as usize;
    for i in 0..=steps {
        let threshold = i as f64 * h.exceedance_step;
        points.push((threshold, exceedance(&records, threshold)?));
    }
    formats::write_exceedance_csv(&out.join("exceedance.csv"), &points)?;

    let mean = sds.iter().sum::<f64>() / n as f64;
    let std = (sds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n.max(2) - 1) as f64).sqrt();
    let report = PopulationReport {
        n_cells: n,
        seed: config.seed,
        sigma_vth_n: config.mismatch.sigma_vth_n,
        sigma_vth_p: config.mismatch.sigma_vth_p,
        sd_mean_volts: mean,
        sd_std_volts: std,
        mass_within_0p04: central_mass(&records, 0.04)?,
        exceedance_0p03: exceedance(&records, 0.03)?,
        exceedance_0p04: exceedance(&records, 0.04)?,
        exceedance_0p05: exceedance(&records, 0.05)?,
        no_flip_cells: records.iter().filter(|r| !r.converged).count(),
    };
    write_json(&out.join("population_report.json"), &report)?;
    println!(
        "population: {} cells, sd mean {:.3} mV, sd std {:.3} mV, {:.1}% within +/-40 mV",
        n,
        mean * 1e3,
        std * 1e3,
        report.mass_within_0p04 * 100.0
    );
    Ok(())
}

// -------------------------------------------------------------------- startup

#[derive(Serialize)]
struct StartupReport {
    rows: usize,
    cols: usize,
    source: String,
    n_trials: u32,
    region_low: f64,
    region_high: f64,
    a0_fraction: f64,
    b_fraction: f64,
    a1_fraction: f64,
    mean_ber: f64,
    retry_exhausted_trials: u64,
    sigma_init: Option<f64>,
}

pub enum StartupMode {
    /// Emulate noisy power-ups of a sampled population.
    Simulate { cells: Option<usize> },
    /// Read a measured dataset (counts CSV or per-trial bitmap).
    Ingest { path: PathBuf },
}

fn emit_startup_outputs(
    config: &RunConfig,
    out: &Path,
    dataset: &StartupDataset,
    retry_exhausted: u64,
    sigma_init: Option<f64>,
) -> Result<(), CliError> {
    formats::write_counts_csv(&out.join("counts.csv"), dataset)?;
    formats::write_spatial_map(&out.join("spatial_map.csv"), dataset)?;

    let sups: Vec<f64> = dataset.records.iter().map(|r| r.sup1()).collect();
    let histogram = make_histogram(&sups, config.histogram.sup_bins, (0.0, 1.0))?;
    formats::write_histogram_csv(&out.join("sup_histogram.csv"), &histogram)?;

    // reliable-cell mask at the A-region boundary, plus the majority response
    let mask = sepsim_core::metrics::select_mask(dataset, REGION_HIGH_DEFAULT)?;
    formats::write_mask_csv(&out.join("mask.csv"), &mask)?;
    let response = sepsim_core::metrics::response_from_dataset(dataset, "chip0");
    formats::write_responses_csv(&out.join("response.csv"), &[response])?;

    let regions = classify_regions(dataset, REGION_LOW_DEFAULT, REGION_HIGH_DEFAULT)?;
    let report = StartupReport {
        rows: dataset.rows,
        cols: dataset.cols,
        source: dataset.source.as_str().to_string(),
        n_trials: dataset.records.first().map(|r| r.n_trials).unwrap_or(0),
        region_low: REGION_LOW_DEFAULT,
        region_high: REGION_HIGH_DEFAULT,
        a0_fraction: regions.a0,
        b_fraction: regions.b,
        a1_fraction: regions.a1,
        mean_ber: mean_ber(dataset)?,
        retry_exhausted_trials: retry_exhausted,
        sigma_init,
    };
    write_json(&out.join("startup_report.json"), &report)?;
    println!(
        "startup: {}x{} {} dataset, regions A0 {:.1}% / B {:.1}% / A1 {:.1}%, mean BER {:.4}",
        dataset.rows,
        dataset.cols,
        dataset.source.as_str(),
        regions.a0 * 100.0,
        regions.b * 100.0,
        regions.a1 * 100.0,
        report.mean_ber
    );
    Ok(())
}

pub fn cmd_startup(
    config: &RunConfig,
    out: &Path,
    mode: StartupMode,
    workers: usize,
) -> Result<(), CliError> {
    ensure_outdir(out)?;
    match mode {
        StartupMode::Simulate { cells } => {
            let (rows, cols) = match cells {
                Some(n) if n != config.cells() => (1, n),
                _ => (config.rows, config.cols),
            };
            let n = rows * cols;
            if n == 0 {
                return Err(CliError::Invalid("dataset size must be positive".into()));
            }
            let pool = pipeline::build_pool(workers);
            let population = sample_population_par(&pool, config, n);
            let env = config.environment();
            let ramp = config.ramp_spec()?;
            let sim = config.sim_params();
            let sims = pipeline::simulate_sup_par(
                &pool,
                &population,
                &env,
                &ramp,
                &sim,
                &config.noise_spec(),
                config.n_trials,
                config.seed,
            );
            let retry_exhausted = sims.iter().map(|s| s.retry_exhausted as u64).sum();
            let dataset = pipeline::dataset_from_simulations(rows, cols, &sims)?;
            emit_startup_outputs(config, out, &dataset, retry_exhausted, Some(config.noise.sigma_init))
        }
        StartupMode::Ingest { path } => {
            let mut dataset = formats::ingest_dataset(&path)?;
            // reshape flat counts to the configured geometry when they match
            if dataset.rows == 1 && dataset.cols == config.cells() {
                dataset = StartupDataset::new(config.rows, config.cols, dataset.records, dataset.source)
                    .map_err(CliError::Core)?;
            }
            emit_startup_outputs(config, out, &dataset, 0, None)
        }
    }
}

// ------------------------------------------------------------------------ fit

#[derive(Serialize)]
struct FitSideReport {
    residual: f64,
    iterations: u64,
    converged: bool,
}

#[derive(Serialize)]
struct FitReport {
    objective: String,
    n_points: usize,
    single_k: f64,
    double_m: f64,
    double_k1: f64,
    double_k2: f64,
    double_slope_at_zero: f64,
    single: FitSideReport,
    double: FitSideReport,
    double_improves_on_single: bool,
}

fn side(fit: &FitResult) -> FitSideReport {
    FitSideReport { residual: fit.residual, iterations: fit.iterations as u64, converged: fit.converged }
}

pub fn cmd_fit(
    config: &RunConfig,
    out: &Path,
    sd_path: &Path,
    sup_path: &Path,
    objective_override: Option<String>,
) -> Result<(), CliError> {
    ensure_outdir(out)?;
    let records = formats::read_sd_csv(sd_path)?;
    let dataset = formats::ingest_dataset(sup_path)?;
    let sds: Vec<f64> = records.iter().map(|r| r.sd).collect();
    let sups: Vec<f64> = dataset.records.iter().map(|r| r.sup1()).collect();

    let objective = objective_override.unwrap_or_else(|| config.fit.objective.clone());
    let (single_fit, double_fit) = match objective.as_str() {
        "quantile" => {
            let pairs = quantile_pairs(&sds, &sups)?;
            (fit_single(&pairs)?, fit_double(&pairs)?)
        }
        "histogram" => {
            let bins = config.fit.histogram_bins;
            (
                fit_single_histogram(&sds, &sups, bins)?,
                fit_double_histogram(&sds, &sups, bins)?,
            )
        }
        other => return Err(CliError::Invalid(format!("unknown fit objective '{other}'"))),
    };

    formats::write_model_json(&out.join("model_single.json"), &single_fit)?;
    formats::write_model_json(&out.join("model_double.json"), &double_fit)?;

    let TransferModel::Single(single) = single_fit.model else { unreachable!() };
    let TransferModel::Double(double) = double_fit.model else { unreachable!() };

    // transfer curves on a fixed SD grid
    let mut curve = String::from("sd_volts,sup1_single,sup1_double\n");
    let span = config.histogram.sd_range;
    let n_grid = 400;
    for i in 0..=n_grid {
        let sd = -span + 2.0 * span * i as f64 / n_grid as f64;
        curve.push_str(&format!("{},{},{}\n", sd, single.eval(sd), double.eval(sd)));
    }
    let curve_path = out.join("fit_curve.csv");
    std::fs::write(&curve_path, curve)
        .map_err(|e| CliError::Io { path: curve_path.display().to_string(), source: e })?;

    // measured vs modeled SUP1 frequency overlay
    let bins = config.histogram.sup_bins;
    let measured = make_histogram(&sups, bins, (0.0, 1.0))?;
    let single_pred: Vec<f64> = sds.iter().map(|&x| single.eval(x)).collect();
    let double_pred: Vec<f64> = sds.iter().map(|&x| double.eval(x)).collect();
    let single_hist = make_histogram(&single_pred, bins, (0.0, 1.0))?;
    let double_hist = make_histogram(&double_pred, bins, (0.0, 1.0))?;
    let mut overlay = String::from("bin_left,bin_right,freq_measured,freq_single,freq_double\n");
    for i in 0..bins {
        overlay.push_str(&format!(
            "{},{},{},{},{}\n",
            measured.bin_edges[i],
            measured.bin_edges[i + 1],
            measured.relative_frequency(i),
            single_hist.relative_frequency(i),
            double_hist.relative_frequency(i)
        ));
    }
    let overlay_path = out.join("fit_overlay.csv");
    std::fs::write(&overlay_path, overlay)
        .map_err(|e| CliError::Io { path: overlay_path.display().to_string(), source: e })?;

    let report = FitReport {
        objective,
        n_points: sds.len(),
        single_k: single.k,
        double_m: double.m,
        double_k1: double.k1,
        double_k2: double.k2,
        double_slope_at_zero: double.slope_at_zero(),
        single: side(&single_fit),
        double: side(&double_fit),
        double_improves_on_single: double_fit.residual <= single_fit.residual,
    };
    write_json(&out.join("fit_report.json"), &report)?;
    println!(
        "fit: single k = {:.1} (residual {:.3e}); double m = {:.3}, k1 = {:.1}, k2 = {:.1} (residual {:.3e})",
        single.k, single_fit.residual, double.m, double.k1, double.k2, double_fit.residual
    );
    Ok(())
}

// ----------------------------------------------------------------- thresholds

pub fn cmd_thresholds(
    config: &RunConfig,
    out: &Path,
    model_path: &Path,
    probabilities: &[f64],
    sd_path: &Path,
) -> Result<(), CliError> {
    ensure_outdir(out)?;
    let model = formats::read_model_json(model_path)?;
    let records = formats::read_sd_csv(sd_path)?;
    let mut probs: Vec<f64> = probabilities.to_vec();
    probs.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    probs.dedup();
    let mut rows = Vec::with_capacity(probs.len());
    for p in probs {
        let sd_th = model.invert_threshold(p, config.device.vdd).map_err(CliError::Core)?;
        let fraction = exceedance(&records, sd_th).map_err(CliError::Core)?;
        println!("p = {p}: SD_th = {:.4} V, cells = {:.1}%", sd_th, fraction * 100.0);
        rows.push((p, sd_th, fraction));
    }
    formats::write_thresholds_csv(&out.join("thresholds.csv"), &rows)
}

// -------------------------------------------------------------------- metrics

#[derive(Serialize)]
struct MetricEntry {
    value_percent: Option<f64>,
    ideal_percent: f64,
}

#[derive(Serialize)]
struct MetricsReport {
    n_responses: usize,
    response_length: usize,
    uniqueness: MetricEntry,
    uniformity: MetricEntry,
    bit_aliasing: MetricEntry,
    reliability: MetricEntry,
}

pub fn cmd_metrics(
    out: &Path,
    response_files: &[PathBuf],
    repeats_file: Option<&Path>,
) -> Result<(), CliError> {
    ensure_outdir(out)?;
    let mut responses: Vec<PufResponse> = Vec::new();
    for file in response_files {
        responses.extend(formats::read_responses_csv(file)?);
    }
    if responses.is_empty() {
        return Err(CliError::Invalid("no responses given".into()));
    }
    let uniqueness_value = if responses.len() >= 2 {
        Some(uniqueness(&responses).map_err(CliError::Core)?)
    } else {
        None
    };
    let aliasing_value = if responses.len() >= 2 {
        Some(bit_aliasing(&responses).map_err(CliError::Core)?)
    } else {
        None
    };
    let mean_uniformity = responses
        .iter()
        .map(|r| uniformity(r).map_err(CliError::Core))
        .sum::<Result<f64, _>>()?
        / responses.len() as f64;
    let reliability_value = match repeats_file {
        Some(path) => {
            let repeats = formats::read_responses_csv(path)?;
            Some(reliability(&responses[0], &repeats).map_err(CliError::Core)?)
        }
        None => None,
    };
    let report = MetricsReport {
        n_responses: responses.len(),
        response_length: responses[0].len(),
        uniqueness: MetricEntry { value_percent: uniqueness_value, ideal_percent: 50.0 },
        uniformity: MetricEntry { value_percent: Some(mean_uniformity), ideal_percent: 50.0 },
        bit_aliasing: MetricEntry { value_percent: aliasing_value, ideal_percent: 50.0 },
        reliability: MetricEntry { value_percent: reliability_value, ideal_percent: 100.0 },
    };
    write_json(&out.join("metrics_report.json"), &report)?;
    let show = |v: Option<f64>| v.map(|x| format!("{x:.2}%")).unwrap_or_else(|| "N/A".into());
    println!(
        "metrics: uniqueness {} | uniformity {} | bit aliasing {} | reliability {}",
        show(uniqueness_value),
        show(Some(mean_uniformity)),
        show(aliasing_value),
        show(reliability_value)
    );
    Ok(())
}

// ------------------------------------------------------------------ calibrate

#[derive(Debug, Clone, Copy)]
pub struct CalibrateOptions {
    /// Target central SD mass inside (-sd_width, sd_width).
    pub target_sd_mass: f64,
    pub sd_width: f64,
    /// Target B-region mass of the emulated SUP dataset.
    pub target_b_mass: f64,
    /// Population size for the mismatch-sigma bisection.
    pub cal_cells: usize,
    /// Population size for the noise-sigma bisection.
    pub sup_cells: usize,
    /// Trials per cell for the noise-sigma bisection.
    pub sup_trials: u32,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        CalibrateOptions {
            target_sd_mass: 0.906,
            sd_width: 0.04,
            target_b_mass: 0.08,
            cal_cells: 2048,
            sup_cells: 512,
            sup_trials: 200,
        }
    }
}

#[derive(Serialize)]
struct CalibrationReport {
    target_sd_mass: f64,
    sd_width_volts: f64,
    sigma_scale_factor: f64,
    sigma_vth_n: f64,
    sigma_vth_p: f64,
    achieved_sd_mass: f64,
    sigma_vth_iterations: u32,
    cal_cells: usize,
    target_b_mass: f64,
    sigma_init: f64,
    achieved_b_mass: f64,
    sigma_init_iterations: u32,
    sup_cells: usize,
    sup_trials: u32,
    seed: u64,
}

/// Bisection on the mismatch scale to hit the central-SD-mass target, then on
/// the start-up noise sigma to hit the B-region-mass target. Writes the
/// calibrated config next to the report.
pub fn cmd_calibrate(
    config: &RunConfig,
    out: &Path,
    opts: &CalibrateOptions,
    workers: usize,
) -> Result<(), CliError> {
    ensure_outdir(out)?;
    let pool = pipeline::build_pool(workers);

    let sigma_step =
        pipeline::calibrate_sigma_vth(&pool, config, opts.target_sd_mass, opts.sd_width, opts.cal_cells)?;
    let calibrated_mismatch = config.mismatch_spec().scaled(sigma_step.value);
    println!(
        "calibrate: sigma scale {:.4} -> sigma_vth_p {:.2} mV (central mass {:.1}%, {} sweeps)",
        sigma_step.value,
        calibrated_mismatch.sigma_vth_p * 1e3,
        sigma_step.achieved * 100.0,
        sigma_step.iterations
    );

    let mut calibrated = config.clone();
    calibrated.mismatch.sigma_vth_n = calibrated_mismatch.sigma_vth_n;
    calibrated.mismatch.sigma_vth_p = calibrated_mismatch.sigma_vth_p;

    let noise_step = pipeline::calibrate_sigma_init(
        &pool,
        &calibrated,
        &calibrated_mismatch,
        opts.target_b_mass,
        opts.sup_cells,
        opts.sup_trials,
    )?;
    calibrated.noise.sigma_init = noise_step.value;
    println!(
        "calibrate: sigma_init {:.3} mV (B mass {:.1}%, {} emulations)",
        noise_step.value * 1e3,
        noise_step.achieved * 100.0,
        noise_step.iterations
    );

    calibrated.save(&out.join("calibrated_config.json"))?;
    let report = CalibrationReport {
        target_sd_mass: opts.target_sd_mass,
        sd_width_volts: opts.sd_width,
        sigma_scale_factor: sigma_step.value,
        sigma_vth_n: calibrated.mismatch.sigma_vth_n,
        sigma_vth_p: calibrated.mismatch.sigma_vth_p,
        achieved_sd_mass: sigma_step.achieved,
        sigma_vth_iterations: sigma_step.iterations,
        cal_cells: opts.cal_cells,
        target_b_mass: opts.target_b_mass,
        sigma_init: calibrated.noise.sigma_init,
        achieved_b_mass: noise_step.achieved,
        sigma_init_iterations: noise_step.iterations,
        sup_cells: opts.sup_cells,
        sup_trials: opts.sup_trials,
        seed: config.seed,
    };
    write_json(&out.join("calibration_report.json"), &report)
}
