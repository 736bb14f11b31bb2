//! Analytic electrical model of the 6T cell.
//!
//! The drain-current model is a smoothed square-law with an exponential
//! subthreshold region, blended through a softplus "charge" interpolation:
//!
//! ```text
//! phi  = 2 * n * Vt                      (n = subthreshold slope factor)
//! q(v) = phi * softplus((vgs - vth - v) / phi)
//! Id   = 0.5 * beta * (q(0)^2 - q(vds)^2) * (1 + lambda * vds)
//! ```
//!
//! with `beta = transconductance_factor * width / length`. The blend is C-inf
//! in both terminal voltages, exactly zero at `vds = 0`, reduces to the
//! classic square law (`0.5*beta*vov^2`, triode `beta*(vov - vds/2)*vds`) in
//! strong inversion and to `exp(vov / (n*Vt)) * (1 - exp(-vds / (n*Vt)))` in
//! subthreshold. P-channel devices are handled by mirroring terminal signs,
//! so callers always pass physical terminal voltages.

use crate::dynamics::StateVector;
use crate::error::Error;
use crate::math::softplus;

/// Thermal voltage kT/q at 300 K, in volts.
pub const THERMAL_VOLTAGE: f64 = 0.02585;

/// Channel polarity of a MOS transistor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    NChannel,
    PChannel,
}

/// Process parameters of one transistor.
///
/// The defaults below are implementer-chosen stand-ins for an undisclosed
/// process (only the supply voltage and the 0.15 um device width come from
/// the reference memory); treat absolute currents and noise margins from this
/// model as self-consistent rather than silicon-accurate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MosParams {
    pub polarity: Polarity,
    /// Nominal threshold voltage, V. Negative for p-channel.
    pub vth_nominal: f64,
    /// Transconductance factor (mobility * Cox) per unit W/L, A/V^2.
    pub transconductance_factor: f64,
    /// Drawn width, um.
    pub width: f64,
    /// Drawn length, um.
    pub length: f64,
    /// Channel-length modulation coefficient, 1/V.
    pub channel_length_modulation: f64,
    /// Subthreshold slope factor n >= 1 (60*n mV/decade at room temperature).
    pub subthreshold_slope_factor: f64,
    /// Documented bound on the off-state (vgs = 0, vds = vdd) drain current, A.
    /// Used by validation and equilibrium diagnostics, not by the current
    /// equation itself: the subthreshold tail is the model's leakage.
    pub off_leakage_scale: f64,
}

impl MosParams {
    /// Default n-channel device: vth +0.40 V, 350 uA/V^2, 0.15/0.15 um.
    pub fn nmos_default() -> Self {
        MosParams {
            polarity: Polarity::NChannel,
            vth_nominal: 0.40,
            transconductance_factor: 350e-6,
            width: 0.15,
            length: 0.15,
            channel_length_modulation: 0.1,
            subthreshold_slope_factor: 1.5,
            off_leakage_scale: 1e-9,
        }
    }

    /// Default p-channel device: vth -0.40 V, 150 uA/V^2, 0.15/0.15 um.
    pub fn pmos_default() -> Self {
        MosParams {
            polarity: Polarity::PChannel,
            vth_nominal: -0.40,
            transconductance_factor: 150e-6,
            ..Self::nmos_default()
        }
    }

    /// Gain factor beta = kp * W / L, A/V^2.
    #[inline]
    pub fn beta(&self) -> f64 {
        self.transconductance_factor * self.width / self.length
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.width > 0.0) || !(self.length > 0.0) {
            return Err(Error::InvalidParameter("transistor geometry must be positive"));
        }
        if !(self.transconductance_factor > 0.0) {
            return Err(Error::InvalidParameter("transconductance factor must be positive"));
        }
        if !(self.subthreshold_slope_factor >= 1.0) {
            return Err(Error::InvalidParameter("subthreshold slope factor must be >= 1"));
        }
        if !self.vth_nominal.is_finite() || !self.channel_length_modulation.is_finite() {
            return Err(Error::InvalidParameter("device parameters must be finite"));
        }
        match self.polarity {
            Polarity::NChannel if self.vth_nominal < 0.0 => {
                Err(Error::InvalidParameter("n-channel threshold must be >= 0"))
            }
            Polarity::PChannel if self.vth_nominal > 0.0 => {
                Err(Error::InvalidParameter("p-channel threshold must be <= 0"))
            }
            _ => Ok(()),
        }
    }
}

/// One sampled transistor: process parameters plus its mismatch offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransistorInstance {
    pub params: MosParams,
    /// Sampled threshold-voltage mismatch, added to `vth_nominal`, V.
    pub vth_offset: f64,
}

impl TransistorInstance {
    pub fn nominal(params: MosParams) -> Self {
        TransistorInstance { params, vth_offset: 0.0 }
    }

    /// Effective threshold including mismatch, V.
    #[inline]
    pub fn effective_vth(&self) -> f64 {
        self.params.vth_nominal + self.vth_offset
    }
}

/// One sampled 6T cell.
///
/// `n1`/`p1` form the inverter driving node Q (gates on QB); `n2`/`p2` drive
/// node QB (gates on Q). The pass transistors `nx1`/`nx2` are held off during
/// start-up and carry no current in any operation here; they are kept so
/// population dumps describe the full cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellInstance {
    pub n1: TransistorInstance,
    pub n2: TransistorInstance,
    pub p1: TransistorInstance,
    pub p2: TransistorInstance,
    pub nx1: TransistorInstance,
    pub nx2: TransistorInstance,
    /// Capacitance at node Q, F.
    pub node_capacitance_q: f64,
    /// Capacitance at node QB, F.
    pub node_capacitance_qb: f64,
    pub cell_id: u64,
}

impl CellInstance {
    /// Perfectly symmetric cell built from the default devices, 1 fF nodes.
    pub fn symmetric_default() -> Self {
        let n = TransistorInstance::nominal(MosParams::nmos_default());
        let p = TransistorInstance::nominal(MosParams::pmos_default());
        CellInstance {
            n1: n,
            n2: n,
            p1: p,
            p2: p,
            nx1: n,
            nx2: n,
            node_capacitance_q: 1e-15,
            node_capacitance_qb: 1e-15,
            cell_id: 0,
        }
    }

    /// The cell with its two halves exchanged (n1<->n2, p1<->p2, nx1<->nx2).
    ///
    /// Relabels Q as QB, so every start-up quantity mirrors: labels swap and
    /// the separatrix distance negates.
    pub fn mirrored(&self) -> Self {
        CellInstance {
            n1: self.n2,
            n2: self.n1,
            p1: self.p2,
            p2: self.p1,
            nx1: self.nx2,
            nx2: self.nx1,
            node_capacitance_q: self.node_capacitance_qb,
            node_capacitance_qb: self.node_capacitance_q,
            cell_id: self.cell_id,
        }
    }

    /// Largest off-state current budget among the latch devices, A.
    pub fn leakage_bound(&self) -> f64 {
        self.n1
            .params
            .off_leakage_scale
            .max(self.n2.params.off_leakage_scale)
            .max(self.p1.params.off_leakage_scale)
            .max(self.p2.params.off_leakage_scale)
    }

    pub fn validate(&self) -> Result<(), Error> {
        for t in [&self.n1, &self.n2, &self.p1, &self.p2, &self.nx1, &self.nx2] {
            t.params.validate()?;
            if !t.effective_vth().is_finite() {
                return Err(Error::InvalidParameter("effective threshold must be finite"));
            }
        }
        if !(self.node_capacitance_q > 0.0) || !(self.node_capacitance_qb > 0.0) {
            return Err(Error::InvalidParameter("node capacitances must be positive"));
        }
        Ok(())
    }
}

/// Supply conditions seen by a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEnvironment {
    /// Nominal supply, V.
    pub vdd: f64,
    /// Instantaneous cell supply (follows the power-up ramp), V.
    pub vbias: f64,
}

impl CellEnvironment {
    /// Cell at full nominal supply.
    pub fn nominal(vdd: f64) -> Self {
        CellEnvironment { vdd, vbias: vdd }
    }
}

/// Drain current of one transistor at the given terminal voltages, A.
///
/// Sign convention: positive current flows into the drain terminal. For
/// p-channel devices the terminal voltages are mirrored internally, so a
/// conducting PMOS pull-up (vgs, vds < 0) returns a negative value.
/// Total on finite inputs, C-inf, and exactly 0 at vds = 0.
#[inline]
pub fn drain_current(t: &TransistorInstance, vgs: f64, vds: f64) -> f64 {
    let (vgs, vds, vth, sign) = match t.params.polarity {
        Polarity::NChannel => (vgs, vds, t.effective_vth(), 1.0),
        Polarity::PChannel => (-vgs, -vds, -t.effective_vth(), -1.0),
    };
    let phi = 2.0 * t.params.subthreshold_slope_factor * THERMAL_VOLTAGE;
    let vov = vgs - vth;
    let q_source = phi * softplus(vov / phi);
    let q_drain = phi * softplus((vov - vds) / phi);
    let channel = 0.5
        * t.params.beta()
        * (q_source * q_source - q_drain * q_drain)
        * (1.0 + t.params.channel_length_modulation * vds);
    sign * channel
}

/// Net currents flowing into nodes Q and QB, A.
///
/// Kirchhoff balance of the latch with pass transistors off: each node sees
/// its PMOS pull-up from `vbias` minus its NMOS pull-down to ground, both
/// gated by the opposite node.
#[inline]
pub fn node_currents(cell: &CellInstance, s: StateVector, env: &CellEnvironment) -> (f64, f64) {
    let vb = env.vbias;
    // Positive drain current flows into the drain, so the node receives
    // -Id(P) from its pull-up and loses +Id(N) to its pull-down.
    let i_q = -drain_current(&cell.p1, s.v_qb - vb, s.v_q - vb) - drain_current(&cell.n1, s.v_qb, s.v_q);
    let i_qb = -drain_current(&cell.p2, s.v_q - vb, s.v_qb - vb) - drain_current(&cell.n2, s.v_q, s.v_qb);
    (i_q, i_qb)
}

/// State derivative d(V_Q, V_QB)/dt of the latch, V/s.
#[inline]
pub fn derivative(cell: &CellInstance, s: StateVector, env: &CellEnvironment) -> StateVector {
    let (i_q, i_qb) = node_currents(cell, s, env);
    StateVector {
        v_q: i_q / cell.node_capacitance_q,
        v_qb: i_qb / cell.node_capacitance_qb,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nmos() -> TransistorInstance {
        TransistorInstance::nominal(MosParams::nmos_default())
    }

    fn pmos() -> TransistorInstance {
        TransistorInstance::nominal(MosParams::pmos_default())
    }

    #[test]
    fn cutoff_current_below_leakage_bound() {
        let i = drain_current(&nmos(), 0.0, 1.2);
        assert!(i > 0.0);
        assert!(i <= MosParams::nmos_default().off_leakage_scale, "I_off = {i:e}");
    }

    #[test]
    fn zero_vds_means_zero_current() {
        for t in [nmos(), pmos()] {
            for vgs in [-1.2, 0.0, 0.3, 0.7, 1.2] {
                assert_eq!(drain_current(&t, vgs, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn full_on_current_regression_anchors() {
        // Frozen from a 40-digit evaluation of the documented equations.
        let i_n = drain_current(&nmos(), 1.2, 1.2);
        assert!((i_n / 1.2544076621612666e-4 - 1.0).abs() < 1e-12, "I_n = {i_n:e}");
        let i_p = drain_current(&pmos(), -1.2, -1.2);
        assert!((i_p / -5.3760328378339998e-5 - 1.0).abs() < 1e-12, "I_p = {i_p:e}");
    }

    #[test]
    fn monotone_in_overdrive_above_threshold() {
        let t = nmos();
        let mut prev = drain_current(&t, 0.45, 1.2);
        for i in 1..=60 {
            let vgs = 0.45 + 0.0125 * i as f64;
            let cur = drain_current(&t, vgs, 1.2);
            assert!(cur > prev, "not increasing at vgs = {vgs}");
            prev = cur;
        }
    }

    #[test]
    fn continuity_across_region_boundaries() {
        // Adjacent samples 0.1 mV apart never jump by more than 1e-3 of the
        // window scale around the region boundaries; a glued piecewise model
        // would show an O(1) seam there.
        let t = nmos();
        let check_window = |currents: &[f64]| {
            let scale = currents.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            for w in currents.windows(2) {
                assert!((w[1] - w[0]).abs() <= 1e-3 * scale, "jump {} vs scale {scale}", w[1] - w[0]);
            }
        };
        // through the threshold (0.36 V to 0.70 V at 0.1 mV steps)
        let currents: Vec<f64> =
            (0..=3400).map(|i| drain_current(&t, 0.36 + 1e-4 * i as f64, 0.6)).collect();
        check_window(&currents);
        // through vdsat (vds 0.4 V to 1.2 V at 0.1 mV steps, vgs = 1.2)
        let currents: Vec<f64> =
            (0..=8000).map(|i| drain_current(&t, 1.2, 0.4 + 1e-4 * i as f64)).collect();
        check_window(&currents);
    }

    #[test]
    fn symmetric_cell_diagonal_currents_equal() {
        let cell = CellInstance::symmetric_default();
        let env = CellEnvironment::nominal(1.2);
        for i in 0..=24 {
            let v = 1.2 * i as f64 / 24.0;
            let (i_q, i_qb) = node_currents(&cell, StateVector::new(v, v), &env);
            assert_eq!(i_q, i_qb, "diagonal asymmetry at v = {v}");
        }
    }

    #[test]
    fn stable_corner_currents_within_leakage() {
        let cell = CellInstance::symmetric_default();
        let env = CellEnvironment::nominal(1.2);
        let (i_q, i_qb) = node_currents(&cell, StateVector::new(1.2, 0.0), &env);
        let bound = cell.leakage_bound();
        assert!(i_q.abs() <= bound, "i_q = {i_q:e}");
        assert!(i_qb.abs() <= bound, "i_qb = {i_qb:e}");
    }

    #[test]
    fn half_swap_swaps_node_currents() {
        let mut cell = CellInstance::symmetric_default();
        cell.n1.vth_offset = 0.02;
        cell.p2.vth_offset = -0.01;
        let env = CellEnvironment::nominal(1.2);
        let s = StateVector::new(0.3, 0.9);
        let (i_q, i_qb) = node_currents(&cell, s, &env);
        let (j_q, j_qb) = node_currents(&cell.mirrored(), s.swapped(), &env);
        assert_eq!((j_q, j_qb), (i_qb, i_q));
    }

    #[test]
    fn current_sign_pullup_vs_pulldown() {
        let cell = CellInstance::symmetric_default();
        let env = CellEnvironment::nominal(1.2);
        // QB low and Q below supply: P1 wins at Q.
        for v in [0.0, 0.3, 0.9, 1.1] {
            let (i_q, _) = node_currents(&cell, StateVector::new(v, 0.0), &env);
            assert!(i_q > 0.0, "pull-up should win at v_q = {v}");
        }
        // QB high and Q above ground: N1 wins at Q.
        for v in [0.1, 0.4, 1.0, 1.2] {
            let (i_q, _) = node_currents(&cell, StateVector::new(v, 1.2), &env);
            assert!(i_q < 0.0, "pull-down should win at v_q = {v}");
        }
    }

    #[test]
    fn derivative_scales_inversely_with_capacitance() {
        let mut cell = CellInstance::symmetric_default();
        cell.n1.vth_offset = -0.03;
        let env = CellEnvironment::nominal(1.2);
        let s = StateVector::new(0.5, 0.6);
        let d1 = derivative(&cell, s, &env);
        cell.node_capacitance_q *= 2.0;
        cell.node_capacitance_qb *= 2.0;
        let d2 = derivative(&cell, s, &env);
        assert_eq!(d2.v_q, d1.v_q / 2.0);
        assert_eq!(d2.v_qb, d1.v_qb / 2.0);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut p = MosParams::nmos_default();
        p.width = 0.0;
        assert!(p.validate().is_err());
        let mut p = MosParams::nmos_default();
        p.subthreshold_slope_factor = 0.9;
        assert!(p.validate().is_err());
        let mut p = MosParams::pmos_default();
        p.vth_nominal = 0.4;
        assert!(p.validate().is_err());
        assert!(MosParams::nmos_default().validate().is_ok());
        assert!(CellInstance::symmetric_default().validate().is_ok());
    }
}
