//! Logistic transfer functions mapping SD to SUP1, their calibration fits,
//! and threshold inversion.
//!
//! Both models are anchored so that SD = 0 maps to SUP1 = 0.5 exactly, large
//! positive SD saturates at 1 and large negative SD at 0. Evaluation goes
//! through `0.5 + 0.5*tanh(k*sd/2)` per component: overflow-safe and odd
//! about (0, 0.5) to the last bit.

use alloc::vec::Vec;

use crate::error::Error;
use crate::math::{ln, logit, sigmoid};
use crate::optim::{nelder_mead, SimplexOptions, SimplexResult};
use crate::separatrix::SdRecord;
use crate::variation::{exceedance, make_histogram};

/// Single-component logistic a / (1 + e^(-k sd)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleLogistic {
    /// Curve maximum; 1 for transfer use.
    pub a: f64,
    /// Steepness, 1/V.
    pub k: f64,
}

impl SingleLogistic {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.k > 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidParameter("single logistic needs k > 0"));
        }
        Ok(())
    }

    /// SUP1 at the given separatrix distance.
    #[inline]
    pub fn eval(&self, sd: f64) -> f64 {
        self.a * sigmoid(self.k * sd)
    }
}

/// Two-component logistic mixture
/// m / (1 + e^(-k1 sd)) + (1 - m) / (1 + e^(-k2 sd)).
///
/// The weights add to 1 by construction, so the model keeps the 0.5 center
/// and the 0/1 tails of the single curve while allowing two slopes: a steep
/// core from the barely-imbalanced cells and a shallow tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleLogistic {
    /// Weight of the k1 component, in (0, 1).
    pub m: f64,
    /// First steepness, 1/V; canonical order keeps k1 <= k2.
    pub k1: f64,
    /// Second steepness, 1/V.
    pub k2: f64,
}

impl DoubleLogistic {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(Error::InvalidParameter("mixture weight must be in (0, 1)"));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::InvalidParameter("steepness parameters must be > 0"));
        }
        Ok(())
    }

    /// SUP1 at the given separatrix distance; strictly increasing, odd about
    /// (0, 0.5), exactly 0.5 at 0.
    #[inline]
    pub fn eval(&self, sd: f64) -> f64 {
        self.m * sigmoid(self.k1 * sd) + (1.0 - self.m) * sigmoid(self.k2 * sd)
    }

    /// Analytic d(SUP1)/d(SD) at SD = 0: (m k1 + (1 - m) k2) / 4.
    #[inline]
    pub fn slope_at_zero(&self) -> f64 {
        (self.m * self.k1 + (1.0 - self.m) * self.k2) / 4.0
    }

    /// Swap components if needed so that k1 <= k2.
    pub fn canonical(self) -> Self {
        if self.k1 <= self.k2 {
            self
        } else {
            DoubleLogistic { m: 1.0 - self.m, k1: self.k2, k2: self.k1 }
        }
    }

    /// SD threshold at which the curve reaches probability `p`, by bisection
    /// over [0, v_max] to 1e-5 V.
    pub fn invert_threshold(&self, p: f64, v_max: f64) -> Result<f64, Error> {
        TransferModel::Double(*self).invert_threshold(p, v_max)
    }
}

/// A fitted transfer function of either arity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransferModel {
    Single(SingleLogistic),
    Double(DoubleLogistic),
}

impl TransferModel {
    pub fn eval(&self, sd: f64) -> f64 {
        match self {
            TransferModel::Single(m) => m.eval(sd),
            TransferModel::Double(m) => m.eval(sd),
        }
    }

    /// Threshold inversion for either arity; same bisection contract as
    /// [`DoubleLogistic::invert_threshold`].
    pub fn invert_threshold(&self, p: f64, v_max: f64) -> Result<f64, Error> {
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::InvalidParameter("threshold probability must be in (0.5, 1)"));
        }
        let supremum = self.eval(v_max);
        if p >= supremum {
            return Err(Error::Unreachable { requested: p, supremum });
        }
        let mut lo = 0.0;
        let mut hi = v_max;
        while hi - lo > 1e-5 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Outcome of a transfer-function fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: TransferModel,
    /// Sum of squared residuals at the optimum.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Pair two equally sized sample sets rank by rank: sort both ascending and
/// match order statistics. This realizes a distribution-to-distribution
/// correspondence without assuming any per-cell pairing.
pub fn quantile_pairs(sd_samples: &[f64], sup_samples: &[f64]) -> Result<Vec<(f64, f64)>, Error> {
    if sd_samples.len() != sup_samples.len() {
        return Err(Error::SizeMismatch { left: sd_samples.len(), right: sup_samples.len() });
    }
    let mut sd = sd_samples.to_vec();
    let mut sup = sup_samples.to_vec();
    sd.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    sup.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(sd.into_iter().zip(sup).collect())
}

fn sum_squared_residuals<M: Fn(f64) -> f64>(model: M, pairs: &[(f64, f64)]) -> f64 {
    pairs.iter().map(|&(x, y)| {
        let r = model(x) - y;
        r * r
    }).sum()
}

/// Fit the steepness of a single logistic (a fixed at 1) to the paired data
/// by simplex search over ln k from k = 100 1/V.
pub fn fit_single(pairs: &[(f64, f64)]) -> Result<FitResult, Error> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: pairs.len() });
    }
    let objective = |theta: &[f64]| {
        let k = crate::math::exp(theta[0]);
        sum_squared_residuals(|x| SingleLogistic { a: 1.0, k }.eval(x), pairs)
    };
    let r = nelder_mead(objective, &[ln(100.0)], &SimplexOptions::default());
    let model = SingleLogistic { a: 1.0, k: crate::math::exp(r.x[0]) };
    Ok(FitResult {
        model: TransferModel::Single(model),
        residual: r.fx,
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// The four documented simplex starting points (m, k1, k2).
const DOUBLE_FIT_STARTS: [(f64, f64, f64); 4] =
    [(0.2, 100.0, 2000.0), (0.5, 50.0, 500.0), (0.1, 200.0, 5000.0), (0.3, 150.0, 1000.0)];

fn decode_double(theta: &[f64]) -> DoubleLogistic {
    DoubleLogistic {
        m: sigmoid(theta[0]),
        k1: crate::math::exp(theta[1]),
        k2: crate::math::exp(theta[2]),
    }
}

fn best_double_fit<F: Fn(&DoubleLogistic) -> f64>(objective: F) -> (DoubleLogistic, SimplexResult) {
    let mut best: Option<(DoubleLogistic, SimplexResult)> = None;
    for (m, k1, k2) in DOUBLE_FIT_STARTS {
        let start = [logit(m), ln(k1), ln(k2)];
        let r = nelder_mead(|theta| objective(&decode_double(theta)), &start, &SimplexOptions::default());
        let model = decode_double(&r.x);
        let better = match &best {
            None => true,
            Some((_, b)) => r.fx < b.fx,
        };
        if better {
            best = Some((model, r));
        }
    }
    best.expect("at least one start")
}

/// Fit the two-component mixture to the paired data.
///
/// The constraints 0 < m < 1 and k1, k2 > 0 are enforced by a logit/log
/// reparameterization; the search is multi-started from four documented
/// points and the best optimum is returned in canonical k1 <= k2 order.
pub fn fit_double(pairs: &[(f64, f64)]) -> Result<FitResult, Error> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: pairs.len() });
    }
    let (model, r) = best_double_fit(|m| sum_squared_residuals(|x| m.eval(x), pairs));
    Ok(FitResult {
        model: TransferModel::Double(model.canonical()),
        residual: r.fx,
        iterations: r.iterations,
        converged: r.converged,
    })
}

fn histogram_distance<M: Fn(f64) -> f64>(
    model: M,
    sd_samples: &[f64],
    measured_freq: &[f64],
    n_bins: usize,
) -> f64 {
    let predicted: Vec<f64> = sd_samples.iter().map(|&sd| model(sd)).collect();
    let hist = make_histogram(&predicted, n_bins, (0.0, 1.0)).expect("fixed range");
    (0..n_bins)
        .map(|i| {
            let d = hist.relative_frequency(i) - measured_freq[i];
            d * d
        })
        .sum()
}

fn measured_frequencies(sup_samples: &[f64], n_bins: usize) -> Result<Vec<f64>, Error> {
    let measured = make_histogram(sup_samples, n_bins, (0.0, 1.0))?;
    Ok((0..n_bins).map(|i| measured.relative_frequency(i)).collect())
}

/// Alternative objective: fit the mixture so that the histogram of predicted
/// SUP1 values over the SD samples matches the histogram of the measured
/// SUP1 samples (sum of squared per-bin relative-frequency differences).
pub fn fit_double_histogram(
    sd_samples: &[f64],
    sup_samples: &[f64],
    n_bins: usize,
) -> Result<FitResult, Error> {
    if sd_samples.len() < 3 || sup_samples.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: sd_samples.len().min(sup_samples.len()) });
    }
    let measured_freq = measured_frequencies(sup_samples, n_bins)?;
    let (model, r) = best_double_fit(|m| {
        histogram_distance(|x| m.eval(x), sd_samples, &measured_freq, n_bins)
    });
    Ok(FitResult {
        model: TransferModel::Double(model.canonical()),
        residual: r.fx,
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Histogram-distance fit of the single-component curve (a fixed at 1).
pub fn fit_single_histogram(
    sd_samples: &[f64],
    sup_samples: &[f64],
    n_bins: usize,
) -> Result<FitResult, Error> {
    if sd_samples.len() < 2 || sup_samples.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: sd_samples.len().min(sup_samples.len()) });
    }
    let measured_freq = measured_frequencies(sup_samples, n_bins)?;
    let r = nelder_mead(
        |theta| {
            let model = SingleLogistic { a: 1.0, k: crate::math::exp(theta[0]) };
            histogram_distance(|x| model.eval(x), sd_samples, &measured_freq, n_bins)
        },
        &[ln(100.0)],
        &SimplexOptions::default(),
    );
    Ok(FitResult {
        model: TransferModel::Single(SingleLogistic { a: 1.0, k: crate::math::exp(r.x[0]) }),
        residual: r.fx,
        iterations: r.iterations,
        converged: r.converged,
    })
}

/// Fraction of the SD population that clears the threshold for probability
/// `p` under the given transfer model.
pub fn reliable_fraction(
    records: &[SdRecord],
    model: &DoubleLogistic,
    p: f64,
    v_max: f64,
) -> Result<f64, Error> {
    let threshold = model.invert_threshold(p, v_max)?;
    exceedance(records, threshold)
}
