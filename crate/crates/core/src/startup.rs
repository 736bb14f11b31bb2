//! Noisy start-up emulation and start-up probability statistics.
//!
//! SUP1 = N1/N is the probability that a cell starts up at logic '1' over N
//! power-ups; SUP0 = N0/N = 1 - SUP1. The noise mechanism is a per-trial
//! Gaussian perturbation of the initial state, clamped to the supply range:
//! it captures the competition between the cell's separatrix distance and
//! random disturbances at a fraction of the cost of stochastic integration.

use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::device::{CellEnvironment, CellInstance};
use crate::dynamics::{settle_label, RampSpec, SimParams, StateLabel, StateVector};
use crate::error::Error;
use crate::rng::{cell_stream, StreamDomain};

/// Start-up trial counts of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StartupRecord {
    pub cell_id: u64,
    pub n_trials: u32,
    pub n_ones: u32,
    pub n_zeros: u32,
}

impl StartupRecord {
    /// Build a record, enforcing `n_ones + n_zeros = n_trials`.
    pub fn from_counts(cell_id: u64, n_ones: u32, n_trials: u32) -> Result<Self, Error> {
        if n_trials == 0 {
            return Err(Error::InvalidParameter("a record needs at least one trial"));
        }
        if n_ones > n_trials {
            return Err(Error::InvalidParameter("n_ones exceeds n_trials"));
        }
        Ok(StartupRecord { cell_id, n_trials, n_ones, n_zeros: n_trials - n_ones })
    }

    /// Start-up at '1' probability.
    #[inline]
    pub fn sup1(&self) -> f64 {
        self.n_ones as f64 / self.n_trials as f64
    }

    /// Start-up at '0' probability, 1 - sup1.
    #[inline]
    pub fn sup0(&self) -> f64 {
        self.n_zeros as f64 / self.n_trials as f64
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetSource {
    Simulated,
    Measured,
}

impl DatasetSource {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetSource::Simulated => "simulated",
            DatasetSource::Measured => "measured",
        }
    }
}

/// Start-up statistics of a rows x cols memory.
#[derive(Debug, Clone, PartialEq)]
pub struct StartupDataset {
    pub rows: usize,
    pub cols: usize,
    pub records: Vec<StartupRecord>,
    pub source: DatasetSource,
}

impl StartupDataset {
    /// Build a dataset, validating the geometry and cell-id layout
    /// (`cell_id = row * cols + col`).
    pub fn new(
        rows: usize,
        cols: usize,
        records: Vec<StartupRecord>,
        source: DatasetSource,
    ) -> Result<Self, Error> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("dataset geometry must be positive"));
        }
        if records.len() != rows * cols {
            return Err(Error::SizeMismatch { left: records.len(), right: rows * cols });
        }
        for (i, r) in records.iter().enumerate() {
            if r.cell_id != i as u64 {
                return Err(Error::InvalidParameter("cell ids must be row-major and contiguous"));
            }
            if r.n_ones + r.n_zeros != r.n_trials {
                return Err(Error::InvalidParameter("counts must satisfy n_ones + n_zeros = n_trials"));
            }
        }
        Ok(StartupDataset { rows, cols, records, source })
    }
}

/// Gaussian initial-condition noise applied per trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Std-dev of the perturbation applied independently to each node, V.
    pub sigma_init: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.sigma_init >= 0.0) {
            return Err(Error::InvalidParameter("sigma_init must be >= 0"));
        }
        Ok(())
    }
}

impl Default for NoiseSpec {
    /// Starting point for calibration against the B-region mass target.
    fn default() -> Self {
        NoiseSpec { sigma_init: 2.5e-3 }
    }
}

/// Result of [`simulate_sup`]: the trial counts plus retry bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupSimulation {
    pub record: StartupRecord,
    /// Trials that stayed unsettled through all retries and were decided by
    /// the sign of V_QB - V_Q at the hold end.
    pub retry_exhausted: u32,
}

const UNSETTLED_RETRY_CAP: u32 = 10;

/// Emulate `n_trials` noisy power-ups of one cell.
///
/// Each trial starts from (0, 0) plus a fresh Gaussian offset per node,
/// clamped to [0, vdd]. Unsettled transients are re-run with a fresh
/// perturbation (the start was effectively on the separatrix); after
/// `UNSETTLED_RETRY_CAP` retries the outcome is decided by the final state.
/// Deterministic per (seed, cell_id, trial).
pub fn simulate_sup(
    cell: &CellInstance,
    env: &CellEnvironment,
    ramp: &RampSpec,
    sim: &SimParams,
    noise: &NoiseSpec,
    n_trials: u32,
    seed: u64,
) -> SupSimulation {
    let mut rng = cell_stream(seed, StreamDomain::StartupNoise, cell.cell_id);
    let normal = Normal::new(0.0, noise.sigma_init.max(f64::MIN_POSITIVE)).expect("sigma");
    let mut ones = 0u32;
    let mut retry_exhausted = 0u32;
    for _ in 0..n_trials {
        let mut outcome = None;
        let mut last_state = StateVector::new(0.0, 0.0);
        for _attempt in 0..=UNSETTLED_RETRY_CAP {
            let start = if noise.sigma_init > 0.0 {
                StateVector::new(
                    normal.sample(&mut rng).clamp(0.0, env.vdd),
                    normal.sample(&mut rng).clamp(0.0, env.vdd),
                )
            } else {
                StateVector::new(0.0, 0.0)
            };
            let (label, final_state) = settle_label(cell, env, start, ramp, sim);
            last_state = final_state;
            if label != StateLabel::Unsettled {
                outcome = Some(label);
                break;
            }
            if noise.sigma_init == 0.0 {
                break; // deterministic trials cannot be re-randomized
            }
        }
        let label = outcome.unwrap_or_else(|| {
            retry_exhausted += 1;
            if last_state.v_qb > last_state.v_q {
                StateLabel::S1
            } else {
                StateLabel::S0
            }
        });
        if label == StateLabel::S1 {
            ones += 1;
        }
    }
    SupSimulation {
        record: StartupRecord::from_counts(cell.cell_id, ones, n_trials).expect("ones <= trials"),
        retry_exhausted,
    }
}

/// A0 / B / A1 shares of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionFractions {
    /// sup1 <= low: reliably starts at '0'.
    pub a0: f64,
    /// low < sup1 < high: unreliable start-up value.
    pub b: f64,
    /// sup1 >= high: reliably starts at '1'.
    pub a1: f64,
}

/// Default region boundaries on the SUP1 axis.
pub const REGION_LOW_DEFAULT: f64 = 0.09;
pub const REGION_HIGH_DEFAULT: f64 = 0.91;

/// Split a dataset into the A0 / B / A1 start-up reliability regions.
pub fn classify_regions(dataset: &StartupDataset, low: f64, high: f64) -> Result<RegionFractions, Error> {
    if dataset.records.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(0.0 <= low && low < high && high <= 1.0) {
        return Err(Error::InvalidParameter("region bounds need 0 <= low < high <= 1"));
    }
    let n = dataset.records.len() as f64;
    let mut a0 = 0usize;
    let mut a1 = 0usize;
    for r in &dataset.records {
        let p = r.sup1();
        if p <= low {
            a0 += 1;
        } else if p >= high {
            a1 += 1;
        }
    }
    let fa0 = a0 as f64 / n;
    let fa1 = a1 as f64 / n;
    Ok(RegionFractions { a0: fa0, b: 1.0 - fa0 - fa1, a1: fa1 })
}

/// Per-cell bit error rate: the probability of not starting at the preferred
/// value, min(sup1, sup0).
#[inline]
pub fn cell_ber(record: &StartupRecord) -> f64 {
    record.sup1().min(record.sup0())
}

/// Mean bit error rate over all cells.
pub fn mean_ber(dataset: &StartupDataset) -> Result<f64, Error> {
    if dataset.records.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(dataset.records.iter().map(cell_ber).sum::<f64>() / dataset.records.len() as f64)
}
