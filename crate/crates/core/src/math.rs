//! Float math shims and small numeric helpers.
//!
//! Transcendental functions are not available in `core`; route them through
//! `libm` when building without `std` so the rest of the crate can stay
//! backend-agnostic.

#[cfg(feature = "std")]
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    x.exp()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn ln(x: f64) -> f64 {
    x.ln()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn ln_1p(x: f64) -> f64 {
    x.ln_1p()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    x.tanh()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn hypot(x: f64, y: f64) -> f64 {
    x.hypot(y)
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn ceil(x: f64) -> f64 {
    x.ceil()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub fn round(x: f64) -> f64 {
    x.round()
}

#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// ln(1 + e^x), overflow-safe on both tails.
#[inline(always)]
pub fn softplus(x: f64) -> f64 {
    if x > 34.0 {
        // e^-x below f64 epsilon relative to x
        x
    } else if x < -34.0 {
        exp(x)
    } else {
        ln_1p(exp(x))
    }
}

/// Logistic sigmoid written through tanh: 0.5 + 0.5*tanh(x/2).
///
/// This form is overflow-safe, exactly 0.5 at x = 0, and odd-symmetric about
/// (0, 0.5) to the last bit because tanh is an odd function.
#[inline(always)]
pub fn sigmoid(x: f64) -> f64 {
    0.5 + 0.5 * tanh(0.5 * x)
}

/// Inverse of [`sigmoid`].
#[inline(always)]
pub fn logit(p: f64) -> f64 {
    ln(p / (1.0 - p))
}
