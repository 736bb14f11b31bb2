//! Monte Carlo cell populations, SD sweeps, histograms and exceedance.

use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::device::{CellEnvironment, CellInstance, Polarity};
use crate::dynamics::{RampSpec, SimParams};
use crate::error::Error;
use crate::rng::{cell_stream, StreamDomain};
use crate::separatrix::{compute_sd, SdRecord};

/// Threshold-voltage mismatch model: independent zero-mean Gaussian offset
/// per transistor, one sigma per polarity (the dominant Pelgrom term; no
/// beta or geometry variation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchSpec {
    pub sigma_vth_n: f64,
    pub sigma_vth_p: f64,
}

impl MismatchSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.sigma_vth_n >= 0.0) || !(self.sigma_vth_p >= 0.0) {
            return Err(Error::InvalidParameter("mismatch sigmas must be >= 0"));
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MismatchSpec {
            sigma_vth_n: self.sigma_vth_n * factor,
            sigma_vth_p: self.sigma_vth_p * factor,
        }
    }
}

impl Default for MismatchSpec {
    /// Starting point for calibration; roughly Pelgrom-scale for a minimum
    /// device. `calibrate` refines it against the SD-mass target.
    fn default() -> Self {
        MismatchSpec { sigma_vth_n: 17e-3, sigma_vth_p: 17e-3 }
    }
}

/// Sample one cell's mismatch offsets from its counter-based stream.
///
/// Draw order is fixed (n1, n2, p1, p2, nx1, nx2) and depends only on
/// (seed, cell_id).
pub fn sample_cell(nominal: &CellInstance, spec: &MismatchSpec, seed: u64, cell_id: u64) -> CellInstance {
    let mut rng = cell_stream(seed, StreamDomain::Mismatch, cell_id);
    let mut cell = nominal.clone();
    cell.cell_id = cell_id;
    for t in [
        &mut cell.n1,
        &mut cell.n2,
        &mut cell.p1,
        &mut cell.p2,
        &mut cell.nx1,
        &mut cell.nx2,
    ] {
        let sigma = match t.params.polarity {
            Polarity::NChannel => spec.sigma_vth_n,
            Polarity::PChannel => spec.sigma_vth_p,
        };
        t.vth_offset = if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("validated sigma").sample(&mut rng)
        } else {
            0.0
        };
    }
    cell
}

/// Sample `n` mismatched cells from the nominal template.
pub fn sample_population(
    nominal: &CellInstance,
    spec: &MismatchSpec,
    n: usize,
    seed: u64,
) -> Vec<CellInstance> {
    (0..n as u64).map(|i| sample_cell(nominal, spec, seed, i)).collect()
}

/// Compute SD for every cell, ordered by cell id.
pub fn sd_sweep(
    population: &[CellInstance],
    env: &CellEnvironment,
    ramp: &RampSpec,
    sim: &SimParams,
    tol: f64,
) -> Vec<SdRecord> {
    let mut records: Vec<SdRecord> =
        population.iter().map(|cell| compute_sd(cell, env, ramp, sim, tol)).collect();
    records.sort_by_key(|r| r.cell_id);
    records
}

/// Fraction of records with |SD| at or above `threshold`.
pub fn exceedance(records: &[SdRecord], threshold: f64) -> Result<f64, Error> {
    if records.is_empty() {
        return Err(Error::EmptySet);
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter("exceedance threshold must be >= 0"));
    }
    let hits = records.iter().filter(|r| r.sd.abs() >= threshold).count();
    Ok(hits as f64 / records.len() as f64)
}

/// Fraction of records with |SD| strictly inside (-width, width).
pub fn central_mass(records: &[SdRecord], width: f64) -> Result<f64, Error> {
    if records.is_empty() {
        return Err(Error::EmptySet);
    }
    let hits = records.iter().filter(|r| r.sd.abs() < width).count();
    Ok(hits as f64 / records.len() as f64)
}

/// Uniform-width histogram with explicit out-of-range counters.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// n_bins + 1 strictly increasing edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// All samples seen, including out-of-range ones.
    pub total: u64,
}

impl Histogram {
    /// In-range count of bin `i` divided by the total sample count.
    pub fn relative_frequency(&self, i: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[i] as f64 / self.total as f64
        }
    }
}

/// Bin `samples` into `n_bins` equal-width bins over `[min, max]`.
///
/// A sample equal to the upper edge falls in the last bin; samples outside
/// the range are tallied in the underflow/overflow counters.
pub fn make_histogram(samples: &[f64], n_bins: usize, range: (f64, f64)) -> Result<Histogram, Error> {
    let (min, max) = range;
    if n_bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin"));
    }
    if !(max > min) {
        return Err(Error::DegenerateRange);
    }
    let width = (max - min) / n_bins as f64;
    let mut counts = alloc::vec![0u64; n_bins];
    let mut underflow = 0u64;
    let mut overflow = 0u64;
    for &x in samples {
        if x < min {
            underflow += 1;
        } else if x > max {
            overflow += 1;
        } else {
            let i = (((x - min) / width) as usize).min(n_bins - 1);
            counts[i] += 1;
        }
    }
    let mut bin_edges = Vec::with_capacity(n_bins + 1);
    for i in 0..=n_bins {
        bin_edges.push(min + width * i as f64);
    }
    Ok(Histogram { bin_edges, counts, underflow, overflow, total: samples.len() as u64 })
}
