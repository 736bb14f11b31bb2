//! Start-up reliability analysis for 6T SRAM cells used as physical
//! unclonable functions.
//!
//! The crate models a six-transistor bit-cell as a two-dimensional dynamical
//! system over the internal node voltages (V_Q, V_QB), integrates power-up
//! transients, and measures the signed separatrix distance SD: the minimal
//! voltage offset along the relevant state-space axis that makes a cell start
//! up to the opposite state. Monte Carlo populations of mismatched cells map
//! SD distributions to start-up probability (SUP) distributions through
//! logistic transfer functions, from which reliability thresholds and PUF
//! quality metrics are derived.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only switches float math from `libm` to the standard library.
//! Everything here is pure computation: file formats, parallel sweeps and the
//! command-line pipeline live in the companion `sepsim` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// validations use `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod device;
pub mod dynamics;
pub mod error;
pub mod math;
pub mod metrics;
pub mod optim;
pub mod rng;
pub mod separatrix;
pub mod startup;
pub mod transfer;
pub mod variation;

pub use device::{CellEnvironment, CellInstance, MosParams, Polarity, TransistorInstance};
pub use dynamics::{EquilibriumSet, RampShape, RampSpec, SimParams, StateLabel, StateVector};
pub use error::Error;
pub use separatrix::SdRecord;
pub use startup::{NoiseSpec, StartupDataset, StartupRecord};
pub use transfer::{DoubleLogistic, FitResult, SingleLogistic, TransferModel};
pub use variation::{Histogram, MismatchSpec};
