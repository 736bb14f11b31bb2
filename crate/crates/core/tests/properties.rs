//! Property suites for the model invariants.

use proptest::prelude::*;

use sepsim_core::device::{derivative, drain_current, node_currents, CellEnvironment, CellInstance};
use sepsim_core::dynamics::{RampSpec, SimParams, StateVector};
use sepsim_core::metrics::{bit_aliasing, uniformity, uniqueness, PufResponse};
use sepsim_core::startup::{simulate_sup, NoiseSpec};
use sepsim_core::transfer::DoubleLogistic;
use sepsim_core::variation::{exceedance, make_histogram, sample_population, MismatchSpec};
use sepsim_core::StateLabel;

fn env() -> CellEnvironment {
    CellEnvironment::nominal(1.2)
}

proptest! {
    // Mirror symmetry: a fully symmetric cell's vector field commutes with
    // swapping the state components.
    #[test]
    fn symmetric_field_commutes_with_swap(
        v_q in -0.1f64..1.3,
        v_qb in -0.1f64..1.3,
        vbias in 0.0f64..1.2,
    ) {
        let cell = CellInstance::symmetric_default();
        let e = CellEnvironment { vdd: 1.2, vbias };
        let s = StateVector::new(v_q, v_qb);
        let f = derivative(&cell, s, &e);
        let g = derivative(&cell, s.swapped(), &e);
        prop_assert_eq!(f.v_q, g.v_qb);
        prop_assert_eq!(f.v_qb, g.v_q);
    }

    // Half-swap relabeling swaps the node currents for any mismatched cell.
    #[test]
    fn half_swap_relabels_node_currents(
        dn1 in -0.06f64..0.06, dn2 in -0.06f64..0.06,
        dp1 in -0.06f64..0.06, dp2 in -0.06f64..0.06,
        v_q in 0.0f64..1.2, v_qb in 0.0f64..1.2,
    ) {
        let mut cell = CellInstance::symmetric_default();
        cell.n1.vth_offset = dn1;
        cell.n2.vth_offset = dn2;
        cell.p1.vth_offset = dp1;
        cell.p2.vth_offset = dp2;
        let s = StateVector::new(v_q, v_qb);
        let (i_q, i_qb) = node_currents(&cell, s, &env());
        let (j_q, j_qb) = node_currents(&cell.mirrored(), s.swapped(), &env());
        prop_assert_eq!((j_q, j_qb), (i_qb, i_q));
    }

    // The drain current is strictly increasing in overdrive above threshold
    // and zero at vds = 0, for either polarity.
    #[test]
    fn drain_current_basics(vds in 0.05f64..1.2, dv in 0.001f64..0.3) {
        let cell = CellInstance::symmetric_default();
        let n = cell.n1;
        let base = drain_current(&n, 0.5, vds);
        prop_assert!(drain_current(&n, 0.5 + dv, vds) > base);
        prop_assert_eq!(drain_current(&n, 0.5, 0.0), 0.0);
        let p = cell.p1;
        let pb = drain_current(&p, -0.5, -vds);
        prop_assert!(drain_current(&p, -0.5 - dv, -vds) < pb);
        prop_assert_eq!(drain_current(&p, -0.5, 0.0), 0.0);
    }

    // Histogram bookkeeping: in-range counts plus overflow counters always
    // add up to the sample count.
    #[test]
    fn histogram_conserves_samples(
        samples in prop::collection::vec(-2.0f64..2.0, 0..300),
        n_bins in 1usize..40,
    ) {
        let h = make_histogram(&samples, n_bins, (-1.0, 1.0)).unwrap();
        prop_assert_eq!(
            h.counts.iter().sum::<u64>() + h.underflow + h.overflow,
            samples.len() as u64
        );
        prop_assert_eq!(h.total, samples.len() as u64);
        prop_assert_eq!(h.bin_edges.len(), n_bins + 1);
    }

    // Exceedance is non-increasing in the threshold.
    #[test]
    fn exceedance_monotone(sds in prop::collection::vec(-0.2f64..0.2, 1..200)) {
        let records: Vec<_> = sds.iter().enumerate().map(|(i, &sd)| sepsim_core::SdRecord {
            cell_id: i as u64,
            sd,
            bias: if sd > 0.0 { StateLabel::S1 } else if sd < 0.0 { StateLabel::S0 } else { StateLabel::Unsettled },
            flip_voltage: sd.abs(),
            iterations: 0,
            converged: true,
        }).collect();
        let mut prev = 1.0;
        for i in 0..=30 {
            let f = exceedance(&records, 0.01 * i as f64).unwrap();
            prop_assert!(f <= prev + 1e-15);
            prev = f;
        }
    }

    // Bit aliasing equals the mean of the per-chip uniformities exactly.
    #[test]
    fn aliasing_is_mean_uniformity(
        rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 24), 2..12),
    ) {
        let responses: Vec<PufResponse> = rows
            .into_iter()
            .enumerate()
            .map(|(i, bits)| PufResponse::new(format!("chip{i}"), bits).unwrap())
            .collect();
        let aliasing = bit_aliasing(&responses).unwrap();
        let mean_u = responses.iter().map(|r| uniformity(r).unwrap()).sum::<f64>()
            / responses.len() as f64;
        prop_assert!((aliasing - mean_u).abs() < 1e-10);
    }

    // Uniqueness is invariant under reordering and global complement.
    #[test]
    fn uniqueness_invariances(
        rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 16), 2..8),
    ) {
        let responses: Vec<PufResponse> = rows
            .into_iter()
            .enumerate()
            .map(|(i, bits)| PufResponse::new(format!("c{i}"), bits).unwrap())
            .collect();
        let base = uniqueness(&responses).unwrap();
        let mut reversed = responses.clone();
        reversed.reverse();
        prop_assert!((uniqueness(&reversed).unwrap() - base).abs() < 1e-12);
        let complemented: Vec<PufResponse> = responses
            .iter()
            .map(|r| PufResponse::new(r.chip_id.clone(), r.bits.iter().map(|b| !b).collect()).unwrap())
            .collect();
        prop_assert!((uniqueness(&complemented).unwrap() - base).abs() < 1e-12);
    }
}

#[test]
fn transfer_requirements_on_dense_grids() {
    let model = DoubleLogistic { m: 0.158, k1: 101.2, k2: 2348.0 };
    assert_eq!(model.eval(0.0), 0.5);
    assert!((model.eval(10.0) - 1.0).abs() < 1e-9);
    assert!(model.eval(-10.0).abs() < 1e-9);
    // odd symmetry over a 1000-point grid
    for i in 1..=1000 {
        let x = 0.08 * i as f64 / 1000.0;
        assert!((model.eval(x) + model.eval(-x) - 1.0).abs() < 1e-12, "x = {x}");
    }
    // strict monotonicity over a 10_000-point grid on [-0.1, 0.1]
    let mut prev = model.eval(-0.1);
    for i in 1..=10_000 {
        let x = -0.1 + 0.2 * i as f64 / 10_000.0;
        let y = model.eval(x);
        assert!(y > prev, "not increasing at x = {x}");
        prev = y;
    }
}

#[test]
fn population_sd_sensitivity_to_sigma() {
    // Larger mismatch sigma widens the vth-offset spread it was drawn from.
    let nominal = CellInstance::symmetric_default();
    let narrow = sample_population(&nominal, &MismatchSpec { sigma_vth_n: 5e-3, sigma_vth_p: 5e-3 }, 512, 7);
    let wide = sample_population(&nominal, &MismatchSpec { sigma_vth_n: 30e-3, sigma_vth_p: 30e-3 }, 512, 7);
    let spread = |pop: &[CellInstance]| {
        pop.iter().map(|c| c.p1.vth_offset.abs()).sum::<f64>() / pop.len() as f64
    };
    assert!(spread(&wide) > 4.0 * spread(&narrow));
}

#[test]
fn noise_pulls_sup_towards_half() {
    // Monotone noise effect on a biased cell: sigma_init sweeping 0 to
    // 2*|sd| moves sup1 towards 0.5.
    let mut cell = CellInstance::symmetric_default();
    cell.p1.vth_offset = -0.003; // sd ~ +3 mV
    let e = env();
    let ramp = RampSpec::linear_default();
    let sim = SimParams::default();
    let n_trials = 5000;
    let sups: Vec<f64> = [0.0, 1.5e-3, 3e-3, 4.5e-3, 6e-3]
        .iter()
        .map(|&sigma| {
            simulate_sup(&cell, &e, &ramp, &sim, &NoiseSpec { sigma_init: sigma }, n_trials, 3)
                .record
                .sup1()
        })
        .collect();
    assert_eq!(sups[0], 1.0);
    // allow binomial noise of ~3 sigma at n = 5000 between neighbours
    for w in sups.windows(2) {
        assert!(w[1] <= w[0] + 0.021, "sup sequence {sups:?}");
    }
    assert!(sups[4] < sups[0] - 0.05, "sup sequence {sups:?}");
    assert!(sups.iter().all(|&s| s >= 0.5));
}
