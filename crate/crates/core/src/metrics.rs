//! PUF quality metrics over response bitmaps and reliable-cell masking.
//!
//! All distance-based metrics use fractional Hamming distances: uniqueness is
//! the mean pairwise inter-chip distance, reliability is 100 minus the mean
//! intra-chip distance against a reference, uniformity is the 1-bit share of
//! one response, and bit aliasing is the mean across-chip 1-frequency per
//! position (equal to the mean of the per-chip uniformities).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::Error;
use crate::separatrix::SdRecord;
use crate::startup::StartupDataset;
use crate::transfer::DoubleLogistic;

/// One chip's start-up response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PufResponse {
    pub chip_id: String,
    pub bits: Vec<bool>,
}

impl PufResponse {
    pub fn new(chip_id: impl Into<String>, bits: Vec<bool>) -> Result<Self, Error> {
        if bits.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(PufResponse { chip_id: chip_id.into(), bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

fn hamming(a: &PufResponse, b: &PufResponse) -> Result<usize, Error> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// Mean pairwise inter-chip fractional Hamming distance, percent (ideal 50%).
pub fn uniqueness(responses: &[PufResponse]) -> Result<f64, Error> {
    if responses.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: responses.len() });
    }
    let mut sum = 0.0;
    let mut pairs = 0u64;
    for i in 0..responses.len() {
        for j in (i + 1)..responses.len() {
            let hd = hamming(&responses[i], &responses[j])?;
            sum += hd as f64 / responses[i].len() as f64;
            pairs += 1;
        }
    }
    Ok(100.0 * sum / pairs as f64)
}

/// Percentage of 1-bits in one response (ideal 50%).
pub fn uniformity(response: &PufResponse) -> Result<f64, Error> {
    if response.is_empty() {
        return Err(Error::EmptySet);
    }
    let ones = response.bits.iter().filter(|&&b| b).count();
    Ok(100.0 * ones as f64 / response.len() as f64)
}

/// Mean across-chip 1-frequency over bit positions, percent (ideal 50%).
pub fn bit_aliasing(responses: &[PufResponse]) -> Result<f64, Error> {
    if responses.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: responses.len() });
    }
    let len = responses[0].len();
    for r in responses {
        if r.len() != len {
            return Err(Error::SizeMismatch { left: r.len(), right: len });
        }
    }
    let mut sum = 0.0;
    for pos in 0..len {
        let ones = responses.iter().filter(|r| r.bits[pos]).count();
        sum += ones as f64 / responses.len() as f64;
    }
    Ok(100.0 * sum / len as f64)
}

/// 100 minus the mean intra-chip fractional Hamming distance against the
/// reference, percent (ideal 100%).
pub fn reliability(reference: &PufResponse, repeats: &[PufResponse]) -> Result<f64, Error> {
    if repeats.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sum = 0.0;
    for r in repeats {
        sum += hamming(reference, r)? as f64 / reference.len() as f64;
    }
    Ok(100.0 * (1.0 - sum / repeats.len() as f64))
}

/// Which cells of a memory are reliable enough to keep in the PUF response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    pub bits: Vec<bool>,
}

impl CellMask {
    pub fn selected_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Select cells whose preferred start-up value repeats with probability at
/// least `p_threshold`: max(sup1, sup0) >= p_threshold.
pub fn select_mask(dataset: &StartupDataset, p_threshold: f64) -> Result<CellMask, Error> {
    if !(p_threshold > 0.5 && p_threshold <= 1.0) {
        return Err(Error::InvalidParameter("mask threshold must be in (0.5, 1]"));
    }
    Ok(CellMask {
        bits: dataset
            .records
            .iter()
            .map(|r| r.sup1().max(r.sup0()) >= p_threshold)
            .collect(),
    })
}

/// Mask selection from SD records through a transfer model: keeps cells with
/// |SD| at or above the inverted threshold for `p_threshold`.
pub fn select_mask_from_sd(
    records: &[SdRecord],
    model: &DoubleLogistic,
    p_threshold: f64,
    v_max: f64,
) -> Result<CellMask, Error> {
    if records.is_empty() {
        return Err(Error::EmptySet);
    }
    let threshold = model.invert_threshold(p_threshold, v_max)?;
    Ok(CellMask { bits: records.iter().map(|r| r.sd.abs() >= threshold).collect() })
}

/// Reference response of a dataset: bit = 1 where the cell starts up at '1'
/// in the majority of trials.
pub fn response_from_dataset(dataset: &StartupDataset, chip_id: impl Into<String>) -> PufResponse {
    PufResponse {
        chip_id: chip_id.into(),
        bits: dataset.records.iter().map(|r| r.sup1() >= 0.5).collect(),
    }
}

/// Keep only the masked-in bits of a response.
pub fn apply_mask(response: &PufResponse, mask: &CellMask) -> Result<PufResponse, Error> {
    if response.len() != mask.len() {
        return Err(Error::SizeMismatch { left: response.len(), right: mask.len() });
    }
    let bits: Vec<bool> = response
        .bits
        .iter()
        .zip(&mask.bits)
        .filter_map(|(&b, &keep)| keep.then_some(b))
        .collect();
    PufResponse::new(response.chip_id.clone(), bits)
}
