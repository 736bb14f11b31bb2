//! Transient integration, equilibria, separatrix tracing and hold SNM.
//!
//! The latch is integrated with classical fixed-step RK4. A fixed step keeps
//! every sweep bit-deterministic; with ~fF nodes and uA-scale currents the
//! fastest time constants are ~10 ps, so the default 1 ps step sits well
//! inside the RK4 stability region while resolving the switching transient.

use alloc::vec::Vec;

use crate::device::{derivative, CellEnvironment, CellInstance};
use crate::error::Error;
use crate::math::hypot;

/// A point in the (V_Q, V_QB) state space, volts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub v_q: f64,
    pub v_qb: f64,
}

impl StateVector {
    #[inline]
    pub fn new(v_q: f64, v_qb: f64) -> Self {
        StateVector { v_q, v_qb }
    }

    /// The mirrored point with the two node voltages exchanged.
    #[inline]
    pub fn swapped(self) -> Self {
        StateVector { v_q: self.v_qb, v_qb: self.v_q }
    }

    #[inline]
    pub fn magnitude(self) -> f64 {
        hypot(self.v_q, self.v_qb)
    }

    /// Componentwise clamp used when reporting diagnostics.
    pub fn clamped_for_reporting(self, vdd: f64) -> Self {
        StateVector {
            v_q: self.v_q.clamp(-0.1, vdd + 0.1),
            v_qb: self.v_qb.clamp(-0.1, vdd + 0.1),
        }
    }

    #[inline]
    fn add_scaled(self, other: StateVector, factor: f64) -> Self {
        StateVector {
            v_q: self.v_q + factor * other.v_q,
            v_qb: self.v_qb + factor * other.v_qb,
        }
    }
}

/// Supply ramp shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RampShape {
    Linear,
    Step,
}

/// Power-up profile: vbias rises from 0 to vdd over `ramp_time`, then holds
/// for `hold_time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampSpec {
    pub shape: RampShape,
    pub ramp_time: f64,
    pub hold_time: f64,
}

impl RampSpec {
    /// Default power-up: linear 1 ns ramp, 50 ns hold.
    pub fn linear_default() -> Self {
        RampSpec { shape: RampShape::Linear, ramp_time: 1e-9, hold_time: 50e-9 }
    }

    /// Instantaneous supply: the decision boundary of a step power-up is the
    /// static separatrix of the full-supply vector field.
    pub fn step(hold_time: f64) -> Self {
        RampSpec { shape: RampShape::Step, ramp_time: 0.0, hold_time }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.ramp_time >= 0.0) {
            return Err(Error::InvalidParameter("ramp_time must be >= 0"));
        }
        if !(self.hold_time > 0.0) {
            return Err(Error::InvalidParameter("hold_time must be > 0"));
        }
        Ok(())
    }

    /// Instantaneous supply voltage at time `t`.
    #[inline]
    pub fn vbias_at(&self, t: f64, vdd: f64) -> f64 {
        match self.shape {
            RampShape::Step => vdd,
            RampShape::Linear => {
                if self.ramp_time <= 0.0 || t >= self.ramp_time {
                    vdd
                } else {
                    vdd * (t / self.ramp_time).max(0.0)
                }
            }
        }
    }

    #[inline]
    pub fn total_time(&self) -> f64 {
        self.ramp_time + self.hold_time
    }
}

/// Which stable state a transient reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    /// Settled at (vdd, 0): the cell stores logic '0'.
    S0,
    /// Settled at (0, vdd): the cell stores logic '1'.
    S1,
    /// Neither corner reached within the hold time (near-separatrix start).
    Unsettled,
}

impl StateLabel {
    pub fn opposite(self) -> StateLabel {
        match self {
            StateLabel::S0 => StateLabel::S1,
            StateLabel::S1 => StateLabel::S0,
            StateLabel::Unsettled => StateLabel::Unsettled,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StateLabel::S0 => "S0",
            StateLabel::S1 => "S1",
            StateLabel::Unsettled => "UNSETTLED",
        }
    }
}

/// Numerical controls for the transient integrator and the equilibrium /
/// manifold solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    /// RK4 step, s.
    pub time_step: f64,
    /// Corner capture radius per component, V.
    pub settle_voltage: f64,
    /// Derivative magnitude below which a corner counts as settled, V/s.
    /// The two-condition test avoids false settling during the slow crawl
    /// near the saddle.
    pub settle_deriv: f64,
    /// Derivative magnitude below which a mid-space state counts as stalled
    /// at the metastable point, V/s. Only checked once the ramp is over; lets
    /// near-separatrix transients return Unsettled without running out the
    /// whole hold time. Must be below `settle_deriv`.
    pub stall_deriv: f64,
    /// Residual derivative magnitude for Newton equilibria, V/s.
    pub equilibrium_deriv: f64,
    /// Central-difference step for numerical Jacobians, V.
    pub jacobian_step: f64,
    /// Newton iteration cap.
    pub newton_max_iter: u32,
    /// Offset along the stable eigenvector seeding the manifold trace, V.
    pub trace_epsilon: f64,
    /// State-space box margin outside [0, vdd] where tracing stops, V.
    pub boundary_margin: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            time_step: 1e-12,
            settle_voltage: 1e-3,
            settle_deriv: 1e4,
            stall_deriv: 1e3,
            equilibrium_deriv: 10.0,
            jacobian_step: 1e-5,
            newton_max_iter: 60,
            trace_epsilon: 1e-6,
            boundary_margin: 0.1,
        }
    }
}

/// Result of one transient run.
#[derive(Debug, Clone)]
pub struct IntegrationResult {
    pub label: StateLabel,
    pub final_state: StateVector,
    pub steps: u64,
    /// Decimated (time, state) samples for diagnostics; states are clamped
    /// to the reporting box.
    pub trajectory: Vec<(f64, StateVector)>,
}

/// One RK4 step of an autonomous-in-state field `f(s, t)`.
#[inline]
fn rk4_step<F: Fn(StateVector, f64) -> StateVector>(
    f: &F,
    s: StateVector,
    t: f64,
    h: f64,
    k1: StateVector,
) -> StateVector {
    let k2 = f(s.add_scaled(k1, 0.5 * h), t + 0.5 * h);
    let k3 = f(s.add_scaled(k2, 0.5 * h), t + 0.5 * h);
    let k4 = f(s.add_scaled(k3, h), t + h);
    StateVector {
        v_q: s.v_q + (h / 6.0) * (k1.v_q + 2.0 * k2.v_q + 2.0 * k3.v_q + k4.v_q),
        v_qb: s.v_qb + (h / 6.0) * (k1.v_qb + 2.0 * k2.v_qb + 2.0 * k3.v_qb + k4.v_qb),
    }
}

#[inline]
fn near_corner(s: StateVector, corner: StateVector, tol: f64) -> bool {
    (s.v_q - corner.v_q).abs() < tol && (s.v_qb - corner.v_qb).abs() < tol
}

fn run_transient<C: FnMut(f64, StateVector)>(
    cell: &CellInstance,
    env: &CellEnvironment,
    initial: StateVector,
    ramp: &RampSpec,
    sim: &SimParams,
    mut on_sample: C,
) -> (StateLabel, StateVector, u64) {
    let vdd = env.vdd;
    let corner_s0 = StateVector::new(vdd, 0.0);
    let corner_s1 = StateVector::new(0.0, vdd);
    let h = sim.time_step;
    let total_steps = crate::math::ceil(ramp.total_time() / h) as u64;

    let field = |s: StateVector, t: f64| {
        let e = CellEnvironment { vdd, vbias: ramp.vbias_at(t, vdd) };
        derivative(cell, s, &e)
    };

    let mut s = initial;
    let mut step: u64 = 0;
    let mut d = field(s, 0.0);
    loop {
        let t = step as f64 * h;
        let dmag = hypot(d.v_q, d.v_qb);
        if dmag < sim.settle_deriv {
            if near_corner(s, corner_s0, sim.settle_voltage) {
                return (StateLabel::S0, s, step);
            }
            if near_corner(s, corner_s1, sim.settle_voltage) {
                return (StateLabel::S1, s, step);
            }
            // Stalled at the metastable point: the dynamics are deterministic,
            // so the label at the end of the hold would be Unsettled anyway.
            if t >= ramp.ramp_time && dmag < sim.stall_deriv {
                return (StateLabel::Unsettled, s, step);
            }
        }
        if step >= total_steps {
            return (StateLabel::Unsettled, s, step);
        }
        s = rk4_step(&field, s, t, h, d);
        step += 1;
        d = field(s, step as f64 * h);
        on_sample(step as f64 * h, s);
    }
}

/// Integrate a start-up transient from `initial` and label the outcome.
///
/// The supply follows `ramp`; integration stops as soon as the state is
/// within the settle tolerance of a stable corner with a small derivative, at
/// a mid-space stall, or at the end of the hold time (`Unsettled`). The
/// returned trajectory is decimated to at most ~4096 samples.
pub fn integrate_from(
    cell: &CellInstance,
    env: &CellEnvironment,
    initial: StateVector,
    ramp: &RampSpec,
    sim: &SimParams,
) -> IntegrationResult {
    let total_steps = crate::math::ceil(ramp.total_time() / sim.time_step) as u64;
    let stride = (total_steps / 4096).max(1);
    let mut trajectory = Vec::new();
    trajectory.push((0.0, initial.clamped_for_reporting(env.vdd)));
    let vdd = env.vdd;
    let (label, final_state, steps) =
        run_transient(cell, env, initial, ramp, sim, |t, s| {
            let n = crate::math::round(t / sim.time_step) as u64;
            if n.is_multiple_of(stride) {
                trajectory.push((t, s.clamped_for_reporting(vdd)));
            }
        });
    IntegrationResult { label, final_state, steps, trajectory }
}

/// Fast-path transient: label and final state only, no trajectory.
pub fn settle_label(
    cell: &CellInstance,
    env: &CellEnvironment,
    initial: StateVector,
    ramp: &RampSpec,
    sim: &SimParams,
) -> (StateLabel, StateVector) {
    let (label, s, _) = run_transient(cell, env, initial, ramp, sim, |_, _| {});
    (label, s)
}

/// Test 0: the power-up transient from (0, 0) that determines the cell bias.
///
/// An exactly symmetric cell starts on the separatrix and returns
/// `Unsettled`; the separatrix-distance search maps that to SD = 0.
pub fn startup_test0(
    cell: &CellInstance,
    env: &CellEnvironment,
    ramp: &RampSpec,
    sim: &SimParams,
) -> StateLabel {
    settle_label(cell, env, StateVector::new(0.0, 0.0), ramp, sim).0
}

/// The three equilibria of the full-supply latch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSet {
    /// Stable state near (vdd, 0).
    pub s0: StateVector,
    /// Stable state near (0, vdd).
    pub s1: StateVector,
    /// Saddle between them; (V_M, V_M) on the diagonal for a symmetric cell.
    pub metastable: StateVector,
}

/// 2x2 Jacobian of the derivative field by central differences.
fn jacobian(cell: &CellInstance, s: StateVector, env: &CellEnvironment, h: f64) -> [[f64; 2]; 2] {
    let fq_p = derivative(cell, StateVector::new(s.v_q + h, s.v_qb), env);
    let fq_m = derivative(cell, StateVector::new(s.v_q - h, s.v_qb), env);
    let fb_p = derivative(cell, StateVector::new(s.v_q, s.v_qb + h), env);
    let fb_m = derivative(cell, StateVector::new(s.v_q, s.v_qb - h), env);
    let inv = 1.0 / (2.0 * h);
    [
        [(fq_p.v_q - fq_m.v_q) * inv, (fb_p.v_q - fb_m.v_q) * inv],
        [(fq_p.v_qb - fq_m.v_qb) * inv, (fb_p.v_qb - fb_m.v_qb) * inv],
    ]
}

/// Damped Newton iteration on the derivative field.
fn newton_equilibrium(
    cell: &CellInstance,
    env: &CellEnvironment,
    seed: StateVector,
    sim: &SimParams,
) -> Result<StateVector, Error> {
    let mut s = seed;
    for _ in 0..sim.newton_max_iter {
        let d = derivative(cell, s, env);
        if hypot(d.v_q, d.v_qb) < sim.equilibrium_deriv {
            return Ok(s);
        }
        let j = jacobian(cell, s, env, sim.jacobian_step);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-30 {
            return Err(Error::NoConvergence("singular Jacobian in equilibrium search"));
        }
        let mut dq = (-d.v_q * j[1][1] + d.v_qb * j[0][1]) / det;
        let mut dqb = (-d.v_qb * j[0][0] + d.v_q * j[1][0]) / det;
        // step damping keeps the iteration inside the model's sane region
        let max_step = 0.1;
        let norm = dq.abs().max(dqb.abs());
        if norm > max_step {
            let scale = max_step / norm;
            dq *= scale;
            dqb *= scale;
        }
        s = StateVector::new(s.v_q + dq, s.v_qb + dqb);
    }
    Err(Error::NoConvergence("equilibrium Newton iteration cap"))
}

/// Locate both stable states and the metastable saddle at full supply.
///
/// Expects `env.vbias == env.vdd`. Newton is seeded at the ideal corners and
/// at the diagonal midpoint.
pub fn find_equilibria(cell: &CellInstance, env: &CellEnvironment, sim: &SimParams) -> Result<EquilibriumSet, Error> {
    let vdd = env.vdd;
    let s0 = newton_equilibrium(cell, env, StateVector::new(vdd, 0.0), sim)?;
    let s1 = newton_equilibrium(cell, env, StateVector::new(0.0, vdd), sim)?;
    let m = newton_equilibrium(cell, env, StateVector::new(0.5 * vdd, 0.5 * vdd), sim)?;
    let between = m.v_q < s0.v_q && m.v_q > s1.v_q && m.v_qb > s0.v_qb && m.v_qb < s1.v_qb;
    if !between {
        return Err(Error::NoConvergence("metastable point not between stable states"));
    }
    Ok(EquilibriumSet { s0, s1, metastable: m })
}

/// Stable eigenvalue/eigenvector of the saddle Jacobian.
fn stable_eigenvector(j: [[f64; 2]; 2]) -> Result<(f64, StateVector), Error> {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return Err(Error::NoConvergence("degenerate eigen-decomposition at saddle"));
    }
    let root = crate::math::sqrt(disc);
    let lambda = 0.5 * (tr - root); // the more negative eigenvalue
    if lambda >= 0.0 {
        return Err(Error::NoConvergence("saddle has no stable direction"));
    }
    // (J - lambda I) v = 0; pick the better-conditioned row.
    let v_a = StateVector::new(j[0][1], lambda - j[0][0]);
    let v_b = StateVector::new(lambda - j[1][1], j[1][0]);
    let v = if v_a.magnitude() >= v_b.magnitude() { v_a } else { v_b };
    let norm = v.magnitude();
    if norm < 1e-30 {
        return Err(Error::NoConvergence("null stable eigenvector"));
    }
    Ok((lambda, StateVector::new(v.v_q / norm, v.v_qb / norm)))
}

fn resample_polyline(points: &[StateVector], n: usize) -> Vec<StateVector> {
    if points.len() < 2 || n < 2 {
        return points.to_vec();
    }
    let mut cumulative = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in points.windows(2) {
        acc += hypot(w[1].v_q - w[0].v_q, w[1].v_qb - w[0].v_qb);
        cumulative.push(acc);
    }
    let total = acc;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 1 < cumulative.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let frac = if len > 0.0 { (target - cumulative[seg]) / len } else { 0.0 };
        out.push(points[seg].add_scaled(
            StateVector::new(
                points[seg + 1].v_q - points[seg].v_q,
                points[seg + 1].v_qb - points[seg].v_qb,
            ),
            frac,
        ));
    }
    out
}

/// Trace the separatrix: the stable manifold of the metastable saddle.
///
/// Integrates the time-reversed full-supply field from two seeds offset by
/// +/- epsilon along the saddle's stable eigenvector; transverse errors decay
/// under the reversed flow, so the trace self-corrects onto the manifold.
/// Returns at least `n_points` samples spanning the state-space box (with
/// `boundary_margin` outside [0, vdd]), passing exactly through the saddle.
pub fn trace_separatrix(
    cell: &CellInstance,
    env: &CellEnvironment,
    sim: &SimParams,
    n_points: usize,
) -> Result<Vec<StateVector>, Error> {
    let eq = find_equilibria(cell, env, sim)?;
    let saddle = eq.metastable;
    let j = jacobian(cell, saddle, env, sim.jacobian_step);
    let (_, v_stable) = stable_eigenvector(j)?;

    let lo = -sim.boundary_margin;
    let hi = env.vdd + sim.boundary_margin;
    let reversed = |s: StateVector, _t: f64| {
        let d = derivative(cell, s, env);
        StateVector::new(-d.v_q, -d.v_qb)
    };
    let h = sim.time_step;
    let max_steps = 10_000_000u64;

    let trace_branch = |direction: f64| -> Result<Vec<StateVector>, Error> {
        let mut s = saddle.add_scaled(v_stable, direction * sim.trace_epsilon);
        let mut branch = Vec::new();
        let mut steps = 0u64;
        while s.v_q >= lo && s.v_q <= hi && s.v_qb >= lo && s.v_qb <= hi {
            branch.push(s);
            let d = reversed(s, 0.0);
            s = rk4_step(&reversed, s, 0.0, h, d);
            steps += 1;
            if steps > max_steps {
                return Err(Error::NoConvergence("separatrix trace did not leave the box"));
            }
        }
        branch.push(s); // first point outside, keeps the span edge-to-edge
        Ok(branch)
    };

    let plus = trace_branch(1.0)?;
    let minus = trace_branch(-1.0)?;
    let half = n_points.div_ceil(2).max(2);
    let mut polyline = resample_polyline(&minus, half);
    polyline.reverse();
    polyline.push(saddle);
    polyline.extend(resample_polyline(&plus, half));
    Ok(polyline)
}

/// Voltage-transfer characteristic of one inverter (pull-up `p`, pull-down
/// `n`): output voltage at which the node currents balance for input `u`.
fn vtc_output(
    p: &crate::device::TransistorInstance,
    n: &crate::device::TransistorInstance,
    u: f64,
    vbias: f64,
) -> f64 {
    use crate::device::drain_current;
    // net current into the output node, strictly decreasing in v
    let g = |v: f64| -drain_current(p, u - vbias, v - vbias) - drain_current(n, u, v);
    let mut lo = 0.0;
    let mut hi = vbias;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Piecewise-linear interpolation over a strictly increasing grid.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let mut lo = 0usize;
    let mut hi = xs.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if xs[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + w * (ys[hi] - ys[lo])
}

const VTC_GRID: usize = 2048;

/// Hold static noise margins of the two butterfly lobes, volts.
///
/// Each lobe's margin is the side of the largest axis-aligned square that
/// fits between the two inverter transfer characteristics. With both curves
/// strictly decreasing, a square of side `s` fits at abscissa `x0` iff
/// `upper(x0 + s) >= lower(x0) + s`, which is monotone in `s` and solved by
/// bisection per grid abscissa.
pub fn hold_snm_lobes(cell: &CellInstance, env: &CellEnvironment) -> Result<(f64, f64), Error> {
    let vb = env.vbias;
    if !(vb > 0.0) {
        return Err(Error::InvalidParameter("hold SNM needs a positive supply"));
    }
    // curve A: inverter 2 (input V_Q = x, output V_QB), a function y = a(x)
    // curve B: inverter 1 (input V_QB = y, output V_Q), inverted to y = b(x)
    let mut xs = Vec::with_capacity(VTC_GRID + 1);
    let mut a_ys = Vec::with_capacity(VTC_GRID + 1);
    for i in 0..=VTC_GRID {
        let x = vb * i as f64 / VTC_GRID as f64;
        xs.push(x);
        a_ys.push(vtc_output(&cell.p2, &cell.n2, x, vb));
    }
    // sample inverter 1 by its own input and invert by sorting on output
    let mut b_pts: Vec<(f64, f64)> = (0..=VTC_GRID)
        .map(|i| {
            let y = vb * i as f64 / VTC_GRID as f64;
            (vtc_output(&cell.p1, &cell.n1, y, vb), y)
        })
        .collect();
    b_pts.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let b_xs: Vec<f64> = b_pts.iter().map(|p| p.0).collect();
    let b_ys: Vec<f64> = b_pts.iter().map(|p| p.1).collect();

    let curve_a = |x: f64| interp(&xs, &a_ys, x);
    let curve_b = |x: f64| interp(&b_xs, &b_ys, x);

    let lobe = |upper: &dyn Fn(f64) -> f64, lower: &dyn Fn(f64) -> f64| -> f64 {
        let mut best = 0.0f64;
        for i in 0..=1024 {
            let x0 = vb * i as f64 / 1024.0;
            let mut lo = 0.0;
            let mut hi = vb - x0;
            if upper(x0) < lower(x0) {
                continue; // outside this lobe
            }
            for _ in 0..40 {
                let s = 0.5 * (lo + hi);
                if upper(x0 + s) >= lower(x0) + s {
                    lo = s;
                } else {
                    hi = s;
                }
            }
            best = best.max(lo);
        }
        best
    };

    let lobe_a_over_b = lobe(&curve_a, &curve_b);
    let lobe_b_over_a = lobe(&curve_b, &curve_a);
    if lobe_a_over_b <= 0.0 || lobe_b_over_a <= 0.0 {
        return Err(Error::NoConvergence("butterfly lobes did not form"));
    }
    Ok((lobe_a_over_b, lobe_b_over_a))
}

/// Hold static noise margin: the smaller of the two lobe squares, volts.
pub fn hold_snm(cell: &CellInstance, env: &CellEnvironment) -> Result<f64, Error> {
    let (a, b) = hold_snm_lobes(cell, env)?;
    Ok(a.min(b))
}
