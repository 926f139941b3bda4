// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! The studies behind each subcommand, returning in-memory results.

use anyhow::{bail, Result};
use mollow_core::dynamics::{evolve_cascaded, single_mode_capture, Evolution};
use mollow_core::observables::{g2_cross, log_negativity, moment, purity, fidelity, MomentIndex, MomentVector};
use mollow_core::pipeline::{
    downward_closure, fit_background, input_mode_amplitude, quantum_efficiency, BackgroundFit, CoherentBackground,
    Denoised, MomentAccumulator, NoiseModel, ShotSampler, FIRST_SECOND,
};
use mollow_core::quantum::{DensityMatrix, C64};
use mollow_core::tomography::{build_sensing_matrix, en_point, reconstruct, EnPoint, SensingMatrix, SolveStatus, TomographyResult};
use rayon::prelude::*;

use crate::config::{MethodName, RunConfig, Shape, SigmaSource};

/// Eigenvalue below which an integrated state is reported as non-positive.
pub const NON_POSITIVE_LEVEL: f64 = -1e-6;

/// Shots per parallel work item of the synthetic pipeline.
pub const SHOT_CHUNK: usize = 1 << 15;

pub fn status_label(status: Option<SolveStatus>) -> &'static str {
    match status {
        Some(SolveStatus::Converged) => "converged",
        Some(SolveStatus::Infeasible) => "infeasible",
        Some(SolveStatus::MaxIter) => "max_iter",
        None => "error",
    }
}

/// Joint evolution at one detuning pair with the configured filters.
pub fn evolve_pair(cfg: &RunConfig, delta1_mhz: f64, delta2_mhz: f64) -> Result<Evolution> {
    let [f1, f2] = cfg.filters(delta1_mhz, delta2_mhz)?;
    Ok(evolve_cascaded(&cfg.params()?, &f1, &f2, &cfg.sim_config())?)
}

/// Two-mode state truncated to the tomography cutoff and renormalized.
pub fn truncated_modes(ev: &Evolution, cutoff: usize) -> Result<DensityMatrix> {
    Ok(ev.modes()?.truncate(&[cutoff, cutoff])?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub delta_mhz: f64,
    pub omega_over_gamma: f64,
    pub duration_ns: f64,
    pub n_mean: f64,
}

/// Single-mode mean photon number over the detuning axis, for every
/// combination of the swept Ω and T.
pub fn spectrum(cfg: &RunConfig) -> Result<Vec<SpectrumRow>> {
    let omegas = if cfg.spectrum.omega_over_gamma.is_empty() {
        vec![cfg.physics.omega_over_gamma]
    } else {
        cfg.spectrum.omega_over_gamma.clone()
    };
    let durations =
        if cfg.spectrum.duration_ns.is_empty() { vec![cfg.filter.duration_ns] } else { cfg.spectrum.duration_ns.clone() };
    let mut jobs = Vec::new();
    for &w in &omegas {
        for &t in &durations {
            for d in cfg.spectrum.delta_mhz.values() {
                jobs.push((w, t, d));
            }
        }
    }
    jobs.par_iter()
        .map(|&(w, t, d)| {
            let mut c = cfg.clone();
            c.physics.omega_over_gamma = w;
            c.filter.duration_ns = t;
            let [f, _] = c.filters(d, d)?;
            let ev = single_mode_capture(&c.params()?, &f, &c.sim_config())?;
            let modes = ev.modes()?;
            let n = modes.expect(&number_operator(modes.space().dims()[0])?)?.re;
            Ok(SpectrumRow { delta_mhz: d, omega_over_gamma: w, duration_ns: t, n_mean: n })
        })
        .collect()
}

fn number_operator(dim: usize) -> Result<mollow_core::quantum::Operator> {
    let a = mollow_core::quantum::annihilation(dim)?;
    Ok(a.dagger().compose(&a)?)
}

/// Indices of the local maxima of `v` (plateaus count once).
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1)).filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub delta1_mhz: f64,
    pub delta2_mhz: f64,
    /// Moments in the order of [`FIRST_SECOND`].
    pub moments: [C64; 8],
}

/// First- and second-order moment maps.
pub fn moment_grid(cfg: &RunConfig) -> Result<Vec<GridPoint>> {
    grid_points(cfg)
        .par_iter()
        .map(|&(d1, d2)| {
            let modes = evolve_pair(cfg, d1, d2)?.modes()?;
            let mut moments = [C64::new(0.0, 0.0); 8];
            for (m, idx) in moments.iter_mut().zip(FIRST_SECOND.iter()) {
                *m = moment(&modes, idx)?;
            }
            Ok(GridPoint { delta1_mhz: d1, delta2_mhz: d2, moments })
        })
        .collect()
}

/// Row-major detuning pairs of the `[grid]` section (Δ₂ fastest).
pub fn grid_points(cfg: &RunConfig) -> Vec<(f64, f64)> {
    let d2s = cfg.grid.delta2_mhz.values();
    cfg.grid.delta1_mhz.values().into_iter().flat_map(|d1| d2s.iter().map(move |&d2| (d1, d2))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub delta1_mhz: f64,
    pub delta2_mhz: f64,
    pub en: f64,
    /// NaN when either occupation vanishes.
    pub g12: f64,
    pub cutoff_warning: bool,
    /// The integrated state had an eigenvalue below [`NON_POSITIVE_LEVEL`]
    /// and was clamped.
    pub non_positive: bool,
    /// One entry per configured reconstruction method.
    pub reconstructed: Vec<EnPoint>,
}

/// Direct E_N and g₁₂ maps plus reconstruction-based E_N maps from exact
/// moments.
pub fn entangle_map(cfg: &RunConfig) -> Result<Vec<MapPoint>> {
    let indices = cfg.tomography.indices();
    let sensing = build_sensing_matrix(&indices, cfg.tomography.cutoff)?;
    let opts = cfg.tomography.solver();
    grid_points(cfg)
        .par_iter()
        .map(|&(d1, d2)| {
            let ev = evolve_pair(cfg, d1, d2)?;
            let modes = ev.modes()?;
            let en = log_negativity(&modes)?;
            let g12 = g2_cross(&modes).unwrap_or(f64::NAN);
            let mut reconstructed = Vec::new();
            if !cfg.grid.reconstruct.is_empty() {
                let exact = MomentVector::exact(&truncated_modes(&ev, cfg.tomography.cutoff)?, &indices)?;
                for m in &cfg.grid.reconstruct {
                    reconstructed.push(en_point(&exact, &sensing, m.method(), &opts));
                }
            }
            Ok(MapPoint {
                delta1_mhz: d1,
                delta2_mhz: d2,
                en,
                g12,
                cutoff_warning: ev.cutoff_warning,
                non_positive: ev.min_eigenvalue < NON_POSITIVE_LEVEL,
                reconstructed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayRow {
    pub delay_ns: f64,
    pub en: f64,
}

pub fn delay_study(cfg: &RunConfig) -> Result<Vec<DelayRow>> {
    let d1 = cfg.delay.delta1_mhz.unwrap_or(-cfg.omega_mhz());
    let d2 = cfg.delay.delta2_mhz.unwrap_or(cfg.omega_mhz());
    cfg.delay
        .delay_ns
        .values()
        .par_iter()
        .map(|&tau| {
            let mut c = cfg.clone();
            c.filter.delay_ns = tau;
            let modes = evolve_pair(&c, d1, d2)?.modes()?;
            Ok(DelayRow { delay_ns: tau, en: log_negativity(&modes)? })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HgRow {
    pub width: f64,
    pub width_ns: f64,
    pub delta1_mhz: f64,
    pub delta2_mhz: f64,
    pub en: f64,
    pub cutoff_warning: bool,
}

/// Hermite–Gauss pair over widths and the first detuning.
pub fn hg_study(cfg: &RunConfig) -> Result<Vec<HgRow>> {
    let mut jobs = Vec::new();
    for &w in &cfg.hg.widths {
        for d1 in cfg.hg.delta1_mhz.values() {
            jobs.push((w, d1));
        }
    }
    jobs.par_iter()
        .map(|&(w, d1)| {
            let mut c = cfg.clone();
            c.filter.shape = Shape::HermiteGauss;
            c.filter.orders = cfg.hg.orders;
            c.filter.width_ns = w * cfg.hg.width_unit_ns;
            let ev = evolve_pair(&c, d1, cfg.hg.delta2_mhz)?;
            Ok(HgRow {
                width: w,
                width_ns: c.filter.width_ns,
                delta1_mhz: d1,
                delta2_mhz: cfg.hg.delta2_mhz,
                en: log_negativity(&ev.modes()?)?,
                cutoff_warning: ev.cutoff_warning,
            })
        })
        .collect()
}

/// Denoised and background-corrected moments from synthetic shots.
#[derive(Debug, Clone)]
pub struct Measured {
    pub moments: MomentVector,
    pub denoised: Denoised,
    pub background: Option<BackgroundFit>,
    pub shots: usize,
}

/// Captured drive amplitudes of the filter pair.
pub fn drive_amplitudes(cfg: &RunConfig, delta_mhz: [f64; 2]) -> Result<[C64; 2]> {
    let params = cfg.params()?;
    let [f1, f2] = cfg.filters(delta_mhz[0], delta_mhz[1])?;
    Ok([input_mode_amplitude(&params, &f1), input_mode_amplitude(&params, &f2)])
}

/// Shot sampler for `truth` with the configured noise, seed and background.
pub fn sampler(cfg: &RunConfig, truth: &DensityMatrix, delta_mhz: [f64; 2]) -> Result<ShotSampler> {
    let mut sampler = ShotSampler::new(truth, NoiseModel::new(cfg.pipeline.n_added)?, cfg.seed)?;
    if let Some(bg) = cfg.pipeline.background {
        let input = drive_amplitudes(cfg, delta_mhz)?;
        sampler = sampler.with_background(CoherentBackground::from_input(bg.phase_a, bg.b, bg.phase_b, input));
    }
    Ok(sampler)
}

/// Synthesizes `cfg.pipeline.shots` interleaved shots from `truth`,
/// denoises the moments in `indices` and, when a background is configured,
/// fits and removes it against the exact low-order moments of `truth`.
pub fn measure(cfg: &RunConfig, truth: &DensityMatrix, indices: &[MomentIndex], delta_mhz: [f64; 2]) -> Result<Measured> {
    let n = cfg.pipeline.shots;
    let sampler = sampler(cfg, truth, delta_mhz)?;
    let wanted: Vec<MomentIndex> = indices.iter().cloned().chain(FIRST_SECOND).collect();
    let chunks: Vec<(u64, u64)> =
        (0..n).step_by(SHOT_CHUNK).map(|s| (s as u64, (s + SHOT_CHUNK).min(n) as u64)).collect();
    let parts: Vec<MomentAccumulator> = chunks
        .par_iter()
        .map(|&(a, b)| -> Result<MomentAccumulator> {
            let mut acc = MomentAccumulator::new(&wanted, n)?;
            sampler.accumulate(a..b, &mut acc)?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = MomentAccumulator::new(&wanted, n)?;
    for p in &parts {
        total.merge(p)?;
    }
    let mut denoised = total.raw()?.unmix();

    let mut background = None;
    if cfg.pipeline.background.is_some() {
        let reference = MomentVector::exact(truth, &FIRST_SECOND[..4])?;
        let closure: Vec<MomentIndex> =
            downward_closure(&FIRST_SECOND[..4]).into_iter().filter(|i| *i != MomentIndex::IDENTITY).collect();
        let fit = fit_background(&denoised.vector(&closure)?, drive_amplitudes(cfg, delta_mhz)?, &reference)?;
        denoised = fit.apply_denoised(&denoised);
        background = Some(fit);
    }
    Ok(Measured { moments: denoised.vector(indices)?, denoised, background, shots: n })
}

#[derive(Debug, Clone)]
pub struct MethodReport {
    pub method: MethodName,
    pub result: TomographyResult,
    pub fidelity: f64,
    pub purity: f64,
    pub en: f64,
}

#[derive(Debug, Clone)]
pub struct TomoReport {
    pub delta_mhz: [f64; 2],
    /// Simulated state at the dynamics cutoff.
    pub direct_en: f64,
    /// Simulated state at the tomography cutoff.
    pub truth: DensityMatrix,
    pub truth_purity: f64,
    pub exact: MomentVector,
    pub measured: Option<Measured>,
    pub efficiency: f64,
    pub methods: Vec<MethodReport>,
}

/// End-to-end: simulate, synthesize, denoise, remove the background and
/// reconstruct with every configured method.
pub fn tomo(cfg: &RunConfig) -> Result<TomoReport> {
    let d1 = cfg.tomography.delta1_mhz.unwrap_or(-cfg.omega_mhz());
    let d2 = cfg.tomography.delta2_mhz.unwrap_or(cfg.omega_mhz());
    let ev = evolve_pair(cfg, d1, d2)?;
    let direct_en = log_negativity(&ev.modes()?)?;
    let truth = truncated_modes(&ev, cfg.tomography.cutoff)?;
    let indices = cfg.tomography.indices();
    let exact = MomentVector::exact(&truth, &indices)?;
    let measured = match cfg.tomography.sigma_source {
        SigmaSource::Exact => None,
        SigmaSource::Pipeline => {
            if indices.iter().any(|i| i.order() > mollow_core::pipeline::MAX_NOISE_ORDER) {
                bail!("the pipeline denoises moments up to order {}; use sigma_source = \"exact\" for the 325-moment set",
                    mollow_core::pipeline::MAX_NOISE_ORDER);
            }
            Some(measure(cfg, &truth, &indices, [d1, d2])?)
        }
    };
    let data = measured.as_ref().map(|m| m.moments.clone()).unwrap_or_else(|| exact.clone());
    let sensing = build_sensing_matrix(&indices, cfg.tomography.cutoff)?;
    let methods = reconstruct_all(cfg, &data, &sensing, &truth)?;
    Ok(TomoReport {
        delta_mhz: [d1, d2],
        direct_en,
        truth_purity: purity(&truth),
        truth,
        exact,
        measured,
        efficiency: quantum_efficiency(&NoiseModel::new(cfg.pipeline.n_added)?),
        methods,
    })
}

fn reconstruct_all(
    cfg: &RunConfig,
    data: &MomentVector,
    sensing: &SensingMatrix,
    truth: &DensityMatrix,
) -> Result<Vec<MethodReport>> {
    let opts = cfg.tomography.solver();
    cfg.tomography
        .methods
        .par_iter()
        .map(|&m| {
            let result = reconstruct(data, sensing, m.method(), &opts)?;
            let (fid, pur, en) = match &result.rho {
                Some(rho) => (fidelity(rho, truth)?, purity(rho), log_negativity(rho)?),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            Ok(MethodReport { method: m, result, fidelity: fid, purity: pur, en })
        })
        .collect()
}
