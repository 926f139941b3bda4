// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

use mollow_core::observables::{enumerate_moments, fidelity, MomentIndex, MomentVector};
use mollow_core::quantum::{random_state, DensityMatrix, HilbertSpace, C64};
use mollow_core::tomography::{
    build_sensing_matrix, l1_norm, ls_objective, reconstruct, reconstruct_cs, reconstruct_ls, Method, SolveStatus,
    SolverOptions, CONSTRAINT_TOL,
};
use rand::SeedableRng;

fn space() -> HilbertSpace {
    HilbertSpace::new(&[5, 5]).unwrap()
}

fn with_sigma(rho: &DensityMatrix, idx: &[MomentIndex], sigma: f64) -> MomentVector {
    let m = MomentVector::exact(rho, idx).unwrap();
    MomentVector::new(idx.to_vec(), m.values().to_vec(), vec![sigma; idx.len()]).unwrap()
}

fn ket(amps: &[(usize, C64)]) -> DensityMatrix {
    let mut psi = vec![C64::new(0.0, 0.0); 25];
    for &(k, a) in amps {
        psi[k] = a;
    }
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= n);
    DensityMatrix::pure(space(), &psi).unwrap()
}

/// Vacuum, a two-photon product state, a weakly squeezed pair and two
/// random states.
fn suite() -> Vec<DensityMatrix> {
    let c = |re: f64, im: f64| C64::new(re, im);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    vec![
        DensityMatrix::basis(space(), 0).unwrap(),
        DensityMatrix::basis(space(), 6).unwrap(),
        ket(&[(0, c(1.0, 0.0)), (6, c(0.3, 0.1)), (12, c(0.09, 0.05))]),
        random_state(space(), 1, &mut rng).unwrap(),
        random_state(space(), 3, &mut rng).unwrap(),
    ]
}

fn physical(rho: &DensityMatrix) -> bool {
    let tr = rho.matrix().trace();
    (tr.re - 1.0).abs() < 1e-7 && tr.im.abs() < 1e-7 && rho.eigenvalues().iter().all(|&v| v > -1e-7)
}

#[test]
fn least_squares_is_at_least_as_good_as_the_truth() {
    let idx = enumerate_moments(2, Some(4), false);
    let a = build_sensing_matrix(&idx, 5).unwrap();
    let opts = SolverOptions::default();
    for rho in suite() {
        let m = with_sigma(&rho, &idx, 1e-2);
        let r = reconstruct_ls(&m, &a, &opts).unwrap();
        let est = r.rho.as_ref().unwrap();
        assert!(physical(est));
        let truth = ls_objective(&m, &a, &rho).unwrap();
        assert!(r.objective <= truth + 1e-6, "{} > {}", r.objective, truth);
    }
}

#[test]
fn compressed_sensing_respects_the_ball() {
    let idx = enumerate_moments(4, None, true);
    let a = build_sensing_matrix(&idx, 5).unwrap();
    let opts = SolverOptions::default();
    for rho in suite().into_iter().skip(2) {
        let m = with_sigma(&rho, &idx, 1e-3);
        let r = reconstruct_cs(&m, &a, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        let est = r.rho.as_ref().unwrap();
        assert!(physical(est));
        let pred = a.apply(est.matrix()).unwrap();
        let misfit: f64 = pred.iter().zip(m.values()).map(|(p, b)| (p - b).norm_sqr()).sum::<f64>().sqrt();
        let radius = (idx.len() as f64).sqrt() * 1e-3;
        assert!(misfit <= radius + 1e-7, "{misfit} vs {radius}");
        assert!(r.constraint_residual <= CONSTRAINT_TOL * 30.0);
    }
}

#[test]
fn compressed_sensing_recovers_sparse_states_from_exact_moments() {
    let idx = enumerate_moments(4, None, true);
    let a = build_sensing_matrix(&idx, 5).unwrap();
    let c = |re: f64| C64::new(re, 0.0);
    for rho in [ket(&[(0, c(1.0)), (6, c(1.0))]), DensityMatrix::basis(space(), 6).unwrap()] {
        let r = reconstruct_cs(&with_sigma(&rho, &idx, 0.0), &a, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert!(fidelity(r.rho.as_ref().unwrap(), &rho).unwrap() > 0.999);
    }
}

#[test]
fn loose_ball_minimizes_l1_below_least_squares() {
    let idx = enumerate_moments(2, Some(4), false);
    let a = build_sensing_matrix(&idx, 5).unwrap();
    let rho = &suite()[2];
    let m = with_sigma(rho, &idx, 10.0);
    let cs = reconstruct_cs(&m, &a, &SolverOptions::default()).unwrap();
    let ls = reconstruct_ls(&m, &a, &SolverOptions::default()).unwrap();
    assert_eq!(cs.status, SolveStatus::Converged);
    assert!(cs.objective <= l1_norm(ls.rho.as_ref().unwrap()) + 1e-6);
    // the trace bounds the l1 norm from below
    assert!((cs.objective - 1.0).abs() < 1e-5, "{}", cs.objective);
}

#[test]
fn row_permutation_does_not_change_the_reconstruction() {
    let idx = enumerate_moments(2, Some(4), false);
    let a = build_sensing_matrix(&idx, 5).unwrap();
    let rho = &suite()[4];
    let m = with_sigma(rho, &idx, 1e-2);
    let mut order: Vec<usize> = (0..idx.len()).collect();
    order.reverse();
    order.swap(3, 17);
    let ap = a.permuted(&order);
    let mp = m.select(ap.indices()).unwrap();
    let opts = SolverOptions::default();
    for method in [Method::LeastSquares, Method::CompressedSensing] {
        let r1 = reconstruct(&m, &a, method, &opts).unwrap();
        let r2 = reconstruct(&mp, &ap, method, &opts).unwrap();
        assert_eq!(r1.status, r2.status);
        let f = fidelity(r1.rho.as_ref().unwrap(), r2.rho.as_ref().unwrap()).unwrap();
        assert!(f > 1.0 - 1e-5, "{method:?}: {f}");
        assert!((r1.objective - r2.objective).abs() <= 1e-5 * (1.0 + r1.objective.abs()));
    }
}

#[test]
fn more_moments_never_lower_fidelity() {
    let small = enumerate_moments(2, Some(4), false);
    let large = enumerate_moments(4, None, true);
    let a_small = build_sensing_matrix(&small, 5).unwrap();
    let a_large = build_sensing_matrix(&large, 5).unwrap();
    let opts = SolverOptions::default();
    for rho in suite() {
        let r_small = reconstruct_ls(&with_sigma(&rho, &small, 0.0), &a_small, &opts).unwrap();
        let r_large = reconstruct_ls(&with_sigma(&rho, &large, 0.0), &a_large, &opts).unwrap();
        let f_small = fidelity(r_small.rho.as_ref().unwrap(), &rho).unwrap();
        let f_large = fidelity(r_large.rho.as_ref().unwrap(), &rho).unwrap();
        assert!(f_large >= f_small - 1e-6, "{f_large} < {f_small}");
        assert!(f_large > 0.999);
    }
}

#[test]
fn solvers_only_return_physical_states() {
    // noisy data: perturb exact moments by a fixed pattern several sigmas wide
    let idx = enumerate_moments(2, Some(4), false);
    let a = build_sensing_matrix(&idx, 5).unwrap();
    let rho = &suite()[3];
    let exact = MomentVector::exact(rho, &idx).unwrap();
    let values: Vec<C64> =
        exact.values().iter().enumerate().map(|(k, v)| v + C64::new(0.02 * ((k as f64) * 1.7).sin(), 0.01)).collect();
    let m = MomentVector::new(idx.clone(), values, vec![5e-3; idx.len()]).unwrap();
    for method in [Method::LeastSquares, Method::CompressedSensing] {
        let r = reconstruct(&m, &a, method, &SolverOptions::default()).unwrap();
        match (&r.rho, r.status) {
            (Some(est), SolveStatus::Converged) => assert!(physical(est)),
            (None, SolveStatus::Infeasible) => {}
            (Some(est), SolveStatus::MaxIter) => assert!(physical(est)),
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
