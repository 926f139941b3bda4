// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

use mollow_core::dynamics::{
    evolve_cascaded, single_mode_capture, step_halving_check, SimConfig, SystemParams, TRACE_DRIFT_LIMIT,
};
use mollow_core::filter::TemporalFilter;
use mollow_core::observables::{fidelity, log_negativity, log_negativity_over, moment, MomentIndex};
use mollow_core::quantum::partial_trace;
use mollow_core::units::{mhz_to_rad_per_s, ns_to_s};
use proptest::prelude::*;

const T0: f64 = 200e-9;

fn params() -> SystemParams {
    let gamma = mhz_to_rad_per_s(8.0);
    SystemParams::new(gamma, 4.04 * gamma).unwrap()
}

fn boxcar(det_mhz: f64, t_ns: f64) -> TemporalFilter {
    TemporalFilter::boxcar(ns_to_s(t_ns), mhz_to_rad_per_s(det_mhz)).unwrap().with_start(T0)
}

fn small() -> SimConfig {
    SimConfig { fock_cutoff: 4, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn trace_is_preserved_and_state_positive(d1 in -40.0f64..40.0, d2 in -40.0f64..40.0, t in 40.0f64..120.0) {
        let ev = evolve_cascaded(&params(), &boxcar(d1, t), &boxcar(d2, t), &small()).unwrap();
        prop_assert!(ev.max_trace_drift < TRACE_DRIFT_LIMIT);
        prop_assert!(ev.state.eigenvalues().iter().all(|&v| v >= -1e-9));
    }

    #[test]
    fn first_mode_is_independent_of_the_second_filter(d1 in -40.0f64..40.0, d2 in -40.0f64..40.0) {
        let p = params();
        let (f1, f2) = (boxcar(d1, 100.0), boxcar(d2, 100.0));
        let joint = evolve_cascaded(&p, &f1, &f2, &small()).unwrap();
        // clamping a non-positive joint state changes its marginals
        prop_assume!(joint.min_eigenvalue > -1e-9);
        let mode1 = partial_trace(&joint.state, &[1]).unwrap();
        let alone = single_mode_capture(&p, &f1, &small()).unwrap();
        let single = partial_trace(&alone.state, &[1]).unwrap();
        prop_assert!(fidelity(&mode1, &single).unwrap() > 0.999);
    }

    #[test]
    fn negativity_ignores_filter_phases(phi1 in 0.0f64..6.3, phi2 in 0.0f64..6.3) {
        let p = params();
        let (f1, f2) = (boxcar(-32.32, 100.0), boxcar(32.32, 100.0));
        let base = log_negativity(&evolve_cascaded(&p, &f1, &f2, &small()).unwrap().modes().unwrap()).unwrap();
        let common = evolve_cascaded(&p, &f1.clone().with_phase(phi1), &f2.clone().with_phase(phi1), &small()).unwrap();
        let local = evolve_cascaded(&p, &f1.with_phase(phi1), &f2.with_phase(phi2), &small()).unwrap();
        prop_assert!((log_negativity(&common.modes().unwrap()).unwrap() - base).abs() < 1e-6);
        prop_assert!((log_negativity(&local.modes().unwrap()).unwrap() - base).abs() < 1e-6);
    }
}

#[test]
fn halving_the_step_changes_little() {
    let p = params();
    for (d1, d2) in [(-32.32, 32.32), (-15.0, 35.0), (0.0, 10.0)] {
        let (f1, f2) = (boxcar(d1, 100.0), boxcar(d2, 100.0));
        let check = step_halving_check(&p, &[&f1, &f2], &SimConfig::default()).unwrap();
        assert!(check.converged, "({d1}, {d2}): {}", check.max_rel_change);
    }
}

#[test]
fn peak_state_is_well_truncated_and_pair_dominated() {
    let p = params();
    let (f1, f2) = (boxcar(-32.32, 100.0), boxcar(32.32, 100.0));
    let default = evolve_cascaded(&p, &f1, &f2, &SimConfig::default()).unwrap();
    assert!(!default.cutoff_warning);
    assert!(default.min_eigenvalue > -1e-9, "{}", default.min_eigenvalue);
    let modes = default.modes().unwrap();

    // the moment check with the top level of a 7-level cutoff
    let guard = SimConfig { fock_cutoff: 7, ..Default::default() };
    let wide = evolve_cascaded(&p, &f1, &f2, &guard).unwrap().modes().unwrap();
    let top = (guard.fock_cutoff - 1) as u32;
    for (hi, lead) in [
        (MomentIndex::new(top, top, 0, 0), MomentIndex::new(1, 1, 0, 0)),
        (MomentIndex::new(0, 0, top, top), MomentIndex::new(0, 0, 1, 1)),
    ] {
        let ratio = moment(&wide, &hi).unwrap().norm() / moment(&wide, &lead).unwrap().norm();
        assert!(ratio < 1e-4, "{ratio}");
    }
    let e6 = log_negativity(&modes).unwrap();
    let e7 = log_negativity(&wide).unwrap();
    assert!((e6 - e7).abs() < 1e-6, "{e6} vs {e7}");

    // largest off-diagonal element couples |00> and |11>
    let m = modes.matrix();
    let n = SimConfig::default().fock_cutoff;
    let pair = m[(0, n + 1)].norm();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && !(i == 0 && j == n + 1) && !(i == n + 1 && j == 0) {
                assert!(m[(i, j)].norm() <= pair, "({i},{j}) {} > {pair}", m[(i, j)].norm());
            }
        }
    }
    // the transpose may be taken over either mode
    let e1 = log_negativity_over(&modes, 0).unwrap();
    let e2 = log_negativity_over(&modes, 1).unwrap();
    assert!((e1 - e2).abs() < 1e-10);
}
