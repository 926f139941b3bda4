// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

use mollow_core::observables::{enumerate_moments, MomentIndex, MomentVector};
use mollow_core::pipeline::{
    denoise_estimate, denoise_general, synthesize_dataset, synthesize_with_background, BackgroundFit,
    CoherentBackground, NoiseModel,
};
use mollow_core::quantum::{random_state, DensityMatrix, HilbertSpace, C64};
use rand::SeedableRng;

fn state() -> DensityMatrix {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    random_state(HilbertSpace::new(&[3, 3]).unwrap(), 2, &mut rng).unwrap()
}

#[test]
fn round_trip_within_three_sigma() {
    let rho = state();
    let idx = enumerate_moments(2, Some(4), false);
    let exact = MomentVector::exact(&rho, &idx).unwrap();
    let noise = NoiseModel::new(1.0).unwrap();
    let (mut hits, mut total) = (0, 0);
    for seed in [1u64, 2, 3] {
        let ds = synthesize_dataset(&rho, noise, 200_000, seed).unwrap();
        let est = denoise_general(&ds, &idx).unwrap();
        for ((v, s), e) in est.values().iter().zip(est.sigmas()).zip(exact.values()) {
            total += 1;
            if (v - e).norm() <= 3.0 * s {
                hits += 1;
            }
        }
    }
    assert!(hits as f64 >= 0.95 * total as f64, "{hits}/{total}");
}

#[test]
fn sigma_shrinks_as_inverse_square_root_of_shots() {
    let rho = state();
    let idx = enumerate_moments(2, Some(4), false);
    let noise = NoiseModel::new(1.0).unwrap();
    let small = denoise_general(&synthesize_dataset(&rho, noise, 100_000, 7).unwrap(), &idx).unwrap();
    let large = denoise_general(&synthesize_dataset(&rho, noise, 200_000, 8).unwrap(), &idx).unwrap();
    let mut ratios: Vec<f64> = small.sigmas().iter().zip(large.sigmas()).map(|(a, b)| a / b).collect();
    ratios.sort_by(|a, b| a.total_cmp(b));
    // pooled over indices; single segment spreads are too noisy
    let median = ratios[ratios.len() / 2];
    let expected = 2f64.sqrt();
    assert!((median / expected - 1.0).abs() < 0.2, "median ratio {median}");
}

#[test]
fn conjugate_indices_give_conjugate_estimates() {
    let rho = state();
    let noise = NoiseModel::new(2.0).unwrap();
    let ds = synthesize_dataset(&rho, noise, 50_000, 4).unwrap();
    let idx = [MomentIndex::new(0, 1, 1, 0), MomentIndex::new(0, 2, 0, 1), MomentIndex::new(1, 2, 0, 1)];
    let both: Vec<MomentIndex> = idx.iter().flat_map(|i| [*i, i.conj()]).collect();
    let est = denoise_estimate(&ds, &both).unwrap();
    for i in idx {
        let a = est.get(&i).unwrap();
        let b = est.get(&i.conj()).unwrap();
        let s = est.sigma(&i).unwrap();
        assert!((a - b.conj()).norm() <= 3.0 * s + 1e-9, "{i}");
    }
}

#[test]
fn removing_a_pure_displacement_preserves_connected_correlations() {
    let rho = state();
    let idx = enumerate_moments(2, Some(4), false);
    let noise = NoiseModel::new(1.0).unwrap();
    let offsets = [C64::new(0.7, -0.4), C64::new(-0.3, 0.9)];
    let plain = denoise_estimate(&synthesize_dataset(&rho, noise, 100_000, 9).unwrap(), &idx).unwrap();
    let shifted_ds = synthesize_with_background(&rho, noise, 100_000, 9, CoherentBackground::new(0.0, offsets)).unwrap();
    let shifted = denoise_estimate(&shifted_ds, &idx).unwrap();

    let connected = |g: &dyn Fn(&MomentIndex) -> C64| {
        let a1 = g(&MomentIndex::new(0, 1, 0, 0));
        let a2 = g(&MomentIndex::new(0, 0, 0, 1));
        let a1d = g(&MomentIndex::new(1, 0, 0, 0));
        [g(&MomentIndex::new(0, 1, 0, 1)) - a1 * a2, g(&MomentIndex::new(1, 0, 0, 1)) - a1d * a2]
    };
    let c_plain = connected(&|i| plain.get(i).unwrap());
    let c_shift = connected(&|i| shifted.get(i).unwrap());
    for (a, b) in c_plain.iter().zip(&c_shift) {
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    // the unit-gain background model removes the offsets entirely
    let fit = BackgroundFit { a: 1.0, phi_a: 0.0, b: 1.0, phi_b: 0.0, residual: 0.0, input: offsets };
    let removed = fit.apply_denoised(&shifted);
    for i in &idx {
        let (a, b) = (removed.get(i).unwrap(), plain.get(i).unwrap());
        assert!((a - b).norm() < 1e-8 * (1.0 + b.norm()), "{i}: {a} vs {b}");
    }
}

#[test]
fn identical_seeds_reproduce_datasets() {
    let rho = state();
    let noise = NoiseModel::new(11.0).unwrap();
    let a = synthesize_dataset(&rho, noise, 1000, 42).unwrap();
    let b = synthesize_dataset(&rho, noise, 1000, 42).unwrap();
    let c = synthesize_dataset(&rho, noise, 1000, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.on_shots(), c.on_shots());
}
