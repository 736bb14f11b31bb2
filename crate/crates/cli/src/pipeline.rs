//! Parallel sweeps and the two calibration loops.
//!
//! Per-cell computations are pure, and parallel maps collect in index order,
//! so every function here yields bit-identical results for any worker count.

use rayon::prelude::*;

use sepsim_core::device::{CellEnvironment, CellInstance};
use sepsim_core::dynamics::{RampSpec, SimParams};
use sepsim_core::separatrix::{compute_sd, SdRecord};
use sepsim_core::startup::{
    classify_regions, simulate_sup, DatasetSource, NoiseSpec, StartupDataset, SupSimulation,
    REGION_HIGH_DEFAULT, REGION_LOW_DEFAULT,
};
use sepsim_core::variation::{central_mass, sample_cell, MismatchSpec};

use crate::config::RunConfig;
use crate::error::CliError;

/// Build the thread pool for a run; 0 workers means all available cores.
pub fn build_pool(workers: usize) -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    builder.build().expect("thread pool")
}

/// SD of every cell in a population, in cell-id order.
pub fn sd_sweep_par(
    pool: &rayon::ThreadPool,
    population: &[CellInstance],
    env: &CellEnvironment,
    ramp: &RampSpec,
    sim: &SimParams,
    tol: f64,
) -> Vec<SdRecord> {
    pool.install(|| {
        population
            .par_iter()
            .map(|cell| compute_sd(cell, env, ramp, sim, tol))
            .collect()
    })
}

/// Noisy SUP emulation of every cell, in cell-id order.
#[allow(clippy::too_many_arguments)]
pub fn simulate_sup_par(
    pool: &rayon::ThreadPool,
    population: &[CellInstance],
    env: &CellEnvironment,
    ramp: &RampSpec,
    sim: &SimParams,
    noise: &NoiseSpec,
    n_trials: u32,
    seed: u64,
) -> Vec<SupSimulation> {
    pool.install(|| {
        population
            .par_iter()
            .map(|cell| simulate_sup(cell, env, ramp, sim, noise, n_trials, seed))
            .collect()
    })
}

/// Assemble a rows x cols dataset from per-cell simulations.
pub fn dataset_from_simulations(
    rows: usize,
    cols: usize,
    sims: &[SupSimulation],
) -> Result<StartupDataset, CliError> {
    let records = sims.iter().map(|s| s.record).collect();
    StartupDataset::new(rows, cols, records, DatasetSource::Simulated).map_err(CliError::Core)
}

/// Outcome of one calibration bisection.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationStep {
    pub value: f64,
    pub achieved: f64,
    pub iterations: u32,
}

/// Calibrate the mismatch sigma so that the SD population has `target_mass`
/// of its cells inside (-width, width).
///
/// Both polarity sigmas are scaled by a common factor found by bisection
/// (the central mass is monotone decreasing in the scale). Deterministic for
/// a fixed seed; evaluated on a `n_cal`-cell population.
pub fn calibrate_sigma_vth(
    pool: &rayon::ThreadPool,
    config: &RunConfig,
    target_mass: f64,
    width: f64,
    n_cal: usize,
) -> Result<CalibrationStep, CliError> {
    let nominal = config.nominal_cell();
    let env = config.environment();
    let ramp = config.ramp_spec()?;
    let sim = config.sim_params();
    let base = config.mismatch_spec();
    if !(base.sigma_vth_n > 0.0 || base.sigma_vth_p > 0.0) {
        return Err(CliError::Invalid("calibration needs a nonzero starting sigma".into()));
    }

    let mass_at = |factor: f64| -> Result<f64, CliError> {
        let spec = base.scaled(factor);
        let population: Vec<CellInstance> = pool.install(|| {
            (0..n_cal as u64)
                .into_par_iter()
                .map(|i| sample_cell(&nominal, &spec, config.seed, i))
                .collect()
        });
        let records = sd_sweep_par(pool, &population, &env, &ramp, &sim, config.bisection_tol);
        central_mass(&records, width).map_err(CliError::Core)
    };

    let mut lo = 0.2; // narrow spread: mass above target
    let mut hi = 4.0; // wide spread: mass below target
    if mass_at(lo)? < target_mass {
        return Err(CliError::Core(sepsim_core::Error::NoConvergence(
            "sigma calibration bracket: even the narrow end misses the target",
        )));
    }
    if mass_at(hi)? > target_mass {
        return Err(CliError::Core(sepsim_core::Error::NoConvergence(
            "sigma calibration bracket: even the wide end misses the target",
        )));
    }
    let mut iterations = 2u32;
    let mut best = (1.0, f64::INFINITY, 0.0);
    while hi - lo > 0.01 && iterations < 20 {
        let mid = 0.5 * (lo + hi);
        let mass = mass_at(mid)?;
        iterations += 1;
        let err = (mass - target_mass).abs();
        if err < best.1 {
            best = (mid, err, mass);
        }
        if err <= 0.004 {
            break;
        }
        if mass > target_mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // value is the scale factor applied to both polarity sigmas
    Ok(CalibrationStep { value: best.0, achieved: best.2, iterations })
}

/// Calibrate the start-up noise sigma so that the B-region mass (cells with
/// `low < sup1 < high`) hits `target_b`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_sigma_init(
    pool: &rayon::ThreadPool,
    config: &RunConfig,
    mismatch: &MismatchSpec,
    target_b: f64,
    n_cells: usize,
    n_trials: u32,
) -> Result<CalibrationStep, CliError> {
    let nominal = config.nominal_cell();
    let env = config.environment();
    let ramp = config.ramp_spec()?;
    let sim = config.sim_params();
    let population: Vec<CellInstance> = pool.install(|| {
        (0..n_cells as u64)
            .into_par_iter()
            .map(|i| sample_cell(&nominal, mismatch, config.seed, i))
            .collect()
    });

    let b_at = |sigma: f64| -> Result<f64, CliError> {
        let sims = simulate_sup_par(
            pool,
            &population,
            &env,
            &ramp,
            &sim,
            &NoiseSpec { sigma_init: sigma },
            n_trials,
            config.seed,
        );
        let dataset = dataset_from_simulations(1, n_cells, &sims)?;
        let regions = classify_regions(&dataset, REGION_LOW_DEFAULT, REGION_HIGH_DEFAULT)
            .map_err(CliError::Core)?;
        Ok(regions.b)
    };

    let mut lo = 1e-4; // quiet: B below target
    let mut hi = 0.02; // loud: B above target
    if b_at(lo)? > target_b {
        return Err(CliError::Core(sepsim_core::Error::NoConvergence(
            "noise calibration bracket: quiet end already exceeds the target",
        )));
    }
    if b_at(hi)? < target_b {
        return Err(CliError::Core(sepsim_core::Error::NoConvergence(
            "noise calibration bracket: loud end still misses the target",
        )));
    }
    let mut iterations = 2u32;
    let mut best = (f64::NAN, f64::INFINITY, 0.0);
    while hi - lo > 1e-5 && iterations < 18 {
        let mid = 0.5 * (lo + hi);
        let b = b_at(mid)?;
        iterations += 1;
        let err = (b - target_b).abs();
        if err < best.1 {
            best = (mid, err, b);
        }
        if err <= 0.004 {
            break;
        }
        if b < target_b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationStep { value: best.0, achieved: best.2, iterations })
}
