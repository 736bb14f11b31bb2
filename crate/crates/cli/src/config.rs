//! Run configuration: JSON document with CLI-flag overrides.
//!
//! Unknown keys are rejected so typos fail loudly. Every field has a default
//! mirroring the reference memory (256 x 64 cells at 1.2 V, 1000 power-up
//! trials); the device and mismatch numbers are model stand-ins that the
//! `calibrate` command refines.

use serde::{Deserialize, Serialize};

use sepsim_core::device::{CellEnvironment, CellInstance, MosParams, TransistorInstance};
use sepsim_core::dynamics::{RampShape, RampSpec, SimParams};
use sepsim_core::startup::NoiseSpec;
use sepsim_core::variation::MismatchSpec;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceConfig {
    /// Nominal supply, V.
    pub vdd: f64,
    /// n-channel threshold, V.
    pub vth_n: f64,
    /// p-channel threshold, V (negative).
    pub vth_p: f64,
    /// n-channel transconductance factor, A/V^2.
    pub kp_n: f64,
    /// p-channel transconductance factor, A/V^2.
    pub kp_p: f64,
    /// Device width, um.
    pub width_um: f64,
    /// Device length, um.
    pub length_um: f64,
    /// Channel-length modulation, 1/V.
    pub channel_length_modulation: f64,
    /// Subthreshold slope factor (>= 1).
    pub subthreshold_slope_factor: f64,
    /// Off-state current budget, A.
    pub off_leakage_scale: f64,
    /// Per-node capacitance, F.
    pub node_capacitance: f64,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            vdd: 1.2,
            vth_n: 0.40,
            vth_p: -0.40,
            kp_n: 350e-6,
            kp_p: 150e-6,
            width_um: 0.15,
            length_um: 0.15,
            channel_length_modulation: 0.1,
            subthreshold_slope_factor: 1.5,
            off_leakage_scale: 1e-9,
            node_capacitance: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MismatchConfig {
    pub sigma_vth_n: f64,
    pub sigma_vth_p: f64,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        let m = MismatchSpec::default();
        MismatchConfig { sigma_vth_n: m.sigma_vth_n, sigma_vth_p: m.sigma_vth_p }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RampConfig {
    /// "linear" or "step".
    pub shape: String,
    /// Ramp duration, s.
    pub ramp_time: f64,
    /// Hold duration after the ramp, s.
    pub hold_time: f64,
}

impl Default for RampConfig {
    fn default() -> Self {
        RampConfig { shape: "linear".into(), ramp_time: 1e-9, hold_time: 50e-9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Std-dev of the per-trial initial-condition perturbation, V.
    pub sigma_init: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { sigma_init: NoiseSpec::default().sigma_init }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// RK4 step, s.
    pub time_step: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { time_step: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// "quantile" (rank pairing) or "histogram" (bin-frequency distance).
    pub objective: String,
    /// Bin count for the histogram objective.
    pub histogram_bins: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { objective: "quantile".into(), histogram_bins: 100 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramConfig {
    /// Bin count for SD histograms.
    pub sd_bins: usize,
    /// SD histograms span [-sd_range, sd_range] V.
    pub sd_range: f64,
    /// Bin count for SUP1 histograms over [0, 1].
    pub sup_bins: usize,
    /// Exceedance curve step, V.
    pub exceedance_step: f64,
    /// Exceedance curve maximum threshold, V.
    pub exceedance_max: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            sd_bins: 80,
            sd_range: 0.12,
            sup_bins: 50,
            exceedance_step: 1e-3,
            exceedance_max: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Master seed; all randomness flows from it.
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub device: DeviceConfig,
    pub mismatch: MismatchConfig,
    pub ramp: RampConfig,
    pub noise: NoiseConfig,
    pub sim: SimConfig,
    /// Power-up trials per cell for SUP emulation.
    pub n_trials: u32,
    /// Flip-search bisection tolerance, V.
    pub bisection_tol: f64,
    pub fit: FitConfig,
    pub histogram: HistogramConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            rows: 256,
            cols: 64,
            device: DeviceConfig::default(),
            mismatch: MismatchConfig::default(),
            ramp: RampConfig::default(),
            noise: NoiseConfig::default(),
            sim: SimConfig::default(),
            n_trials: 1000,
            bisection_tol: sepsim_core::separatrix::DEFAULT_BISECTION_TOL,
            fit: FitConfig::default(),
            histogram: HistogramConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Malformed {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.nominal_cell().validate().map_err(CliError::Core)?;
        self.mismatch_spec().validate().map_err(CliError::Core)?;
        self.ramp_spec()?.validate().map_err(CliError::Core)?;
        sepsim_core::startup::NoiseSpec { sigma_init: self.noise.sigma_init }
            .validate()
            .map_err(CliError::Core)?;
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Invalid("rows and cols must be positive".into()));
        }
        if !(self.bisection_tol > 0.0) {
            return Err(CliError::Invalid("bisection_tol must be > 0".into()));
        }
        if !(self.sim.time_step > 0.0) {
            return Err(CliError::Invalid("time_step must be > 0".into()));
        }
        if self.n_trials == 0 {
            return Err(CliError::Invalid("n_trials must be >= 1".into()));
        }
        match self.fit.objective.as_str() {
            "quantile" | "histogram" => {}
            other => return Err(CliError::Invalid(format!("unknown fit objective '{other}'"))),
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn nominal_cell(&self) -> CellInstance {
        let d = &self.device;
        let nmos = MosParams {
            vth_nominal: d.vth_n,
            transconductance_factor: d.kp_n,
            width: d.width_um,
            length: d.length_um,
            channel_length_modulation: d.channel_length_modulation,
            subthreshold_slope_factor: d.subthreshold_slope_factor,
            off_leakage_scale: d.off_leakage_scale,
            ..MosParams::nmos_default()
        };
        let pmos = MosParams {
            vth_nominal: d.vth_p,
            transconductance_factor: d.kp_p,
            width: d.width_um,
            length: d.length_um,
            channel_length_modulation: d.channel_length_modulation,
            subthreshold_slope_factor: d.subthreshold_slope_factor,
            off_leakage_scale: d.off_leakage_scale,
            ..MosParams::pmos_default()
        };
        let n = TransistorInstance::nominal(nmos);
        let p = TransistorInstance::nominal(pmos);
        CellInstance {
            n1: n,
            n2: n,
            p1: p,
            p2: p,
            nx1: n,
            nx2: n,
            node_capacitance_q: d.node_capacitance,
            node_capacitance_qb: d.node_capacitance,
            cell_id: 0,
        }
    }

    pub fn environment(&self) -> CellEnvironment {
        CellEnvironment::nominal(self.device.vdd)
    }

    pub fn mismatch_spec(&self) -> MismatchSpec {
        MismatchSpec { sigma_vth_n: self.mismatch.sigma_vth_n, sigma_vth_p: self.mismatch.sigma_vth_p }
    }

    pub fn ramp_spec(&self) -> Result<RampSpec, CliError> {
        let shape = match self.ramp.shape.as_str() {
            "linear" => RampShape::Linear,
            "step" => RampShape::Step,
            other => return Err(CliError::Invalid(format!("unknown ramp shape '{other}'"))),
        };
        Ok(RampSpec { shape, ramp_time: self.ramp.ramp_time, hold_time: self.ramp.hold_time })
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams { time_step: self.sim.time_step, ..SimParams::default() }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec { sigma_init: self.noise.sigma_init }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip() {
        let config = RunConfig::default();
        config.validate().unwrap();
        let text = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seeds": 3}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        let err = serde_json::from_str::<RunConfig>(r#"{"device": {"vddd": 1.0}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn partial_configs_fill_defaults() {
        let config: RunConfig =
            serde_json::from_str(r#"{"seed": 9, "mismatch": {"sigma_vth_p": 0.02}}"#).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.mismatch.sigma_vth_p, 0.02);
        assert_eq!(config.mismatch.sigma_vth_n, MismatchConfig::default().sigma_vth_n);
        assert_eq!(config.rows, 256);
    }
}
