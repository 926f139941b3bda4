// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Interleaved shot synthesis.
//!
//! A drive-on shot is `s_k = α_k + z_k`: `α` is drawn from the Husimi Q
//! function of the two-mode state and `z` is complex Gaussian with
//! `E|z|² = n_added`. This reproduces the statistics of `S = a + h†` with
//! `h` thermal. Drive-off shots use the vacuum in place of the state.
//!
//! Each shot has its own ChaCha stream (`2i` on, `2i + 1` off) under a
//! common seed, so shots can be generated in any order or in parallel.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use super::background::CoherentBackground;
use super::denoise::MomentAccumulator;
use super::NoiseModel;
use crate::error::{Error, Result};
use crate::quantum::{eigh, DensityMatrix, C64};

/// Proposals beyond this radius (per mode) are rejected.
const R_MAX: f64 = 12.0;
const GRID_CELLS: usize = 96;
const PROPOSAL_VARIANCES: [f64; 4] = [1.5, 2.0, 3.0, 4.0];
const MAX_TRIES: usize = 100_000;
const MIN_WEIGHT: f64 = 1e-13;

/// Paired drive-on / drive-off records.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedDataset {
    on_shots: Vec<[C64; 2]>,
    off_shots: Vec<[C64; 2]>,
    seed: u64,
    noise: NoiseModel,
}

impl InterleavedDataset {
    pub fn new(on_shots: Vec<[C64; 2]>, off_shots: Vec<[C64; 2]>, seed: u64, noise: NoiseModel) -> Result<Self> {
        if on_shots.len() != off_shots.len() {
            return Err(Error::DimensionMismatch { expected: on_shots.len(), found: off_shots.len() });
        }
        Ok(Self { on_shots, off_shots, seed, noise })
    }

    pub fn len(&self) -> usize {
        self.on_shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.on_shots.is_empty()
    }

    pub fn on_shots(&self) -> &[[C64; 2]] {
        &self.on_shots
    }

    pub fn off_shots(&self) -> &[[C64; 2]] {
        &self.off_shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Feeds every shot pair into `acc`.
    pub fn accumulate(&self, acc: &mut MomentAccumulator) {
        for (i, (on, off)) in self.on_shots.iter().zip(&self.off_shots).enumerate() {
            acc.push(i, *on, *off);
        }
    }
}

#[derive(Debug, Clone)]
struct PureComponent {
    // (n, m, ψ_nm / sqrt(n! m!))
    coeffs: Vec<(u32, u32, C64)>,
    variance: f64,
    bound: f64,
}

impl PureComponent {
    fn new(psi: &[C64], d1: usize, d2: usize) -> Self {
        let mut fact = alloc::vec![1.0f64; d1.max(d2)];
        for k in 1..fact.len() {
            fact[k] = fact[k - 1] * k as f64;
        }
        let coeffs: Vec<(u32, u32, C64)> = (0..d1 * d2)
            .filter(|&i| psi[i].norm() > 1e-15)
            .map(|i| {
                let (n, m) = (i / d2, i % d2);
                (n as u32, m as u32, psi[i] / libm::sqrt(fact[n] * fact[m]))
            })
            .collect();

        // B(r1, r2) = Σ |c_nm| r1^n r2^m bounds |F| and is increasing in both
        // radii, so corner values bound each grid cell
        let h = R_MAX / GRID_CELLS as f64;
        let k = GRID_CELLS + 1;
        let mut corner = alloc::vec![0.0f64; k * k];
        for i in 0..k {
            for j in 0..k {
                let (r1, r2) = (i as f64 * h, j as f64 * h);
                corner[i * k + j] = coeffs
                    .iter()
                    .map(|&(n, m, c)| c.norm() * libm::pow(r1, n as f64) * libm::pow(r2, m as f64))
                    .sum();
            }
        }
        let mut best = (f64::INFINITY, 2.0);
        for &s2 in &PROPOSAL_VARIANCES {
            let decay = 1.0 - 1.0 / s2;
            let mut m = 0.0f64;
            for i in 0..GRID_CELLS {
                for j in 0..GRID_CELLS {
                    let b = corner[(i + 1) * k + (j + 1)];
                    let (r1, r2) = (i as f64 * h, j as f64 * h);
                    m = m.max(s2 * s2 * b * b * libm::exp(-(r1 * r1 + r2 * r2) * decay));
                }
            }
            if m < best.0 {
                best = (m, s2);
            }
        }
        Self { coeffs, variance: best.1, bound: best.0 }
    }

    /// `Q(α) / g(α)` for the Gaussian proposal `g`.
    fn ratio(&self, a1: C64, a2: C64) -> f64 {
        let (b1, b2) = (a1.conj(), a2.conj());
        let f: C64 = self.coeffs.iter().map(|&(n, m, c)| c * b1.powu(n) * b2.powu(m)).sum();
        let s2 = self.variance;
        let r2 = a1.norm_sqr() + a2.norm_sqr();
        s2 * s2 * f.norm_sqr() * libm::exp(-r2 * (1.0 - 1.0 / s2))
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Result<[C64; 2]> {
        let sd = libm::sqrt(self.variance / 2.0);
        for _ in 0..MAX_TRIES {
            let a1 = complex_normal(rng, sd);
            let a2 = complex_normal(rng, sd);
            if a1.norm() > R_MAX || a2.norm() > R_MAX {
                continue;
            }
            let u: f64 = rng.random();
            if u * self.bound < self.ratio(a1, a2) {
                return Ok([a1, a2]);
            }
        }
        Err(Error::Sampling(format!("no acceptance after {MAX_TRIES} proposals")))
    }
}

fn complex_normal<R: Rng>(rng: &mut R, sd: f64) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * sd, im * sd)
}

/// Draws interleaved shot pairs for a fixed two-mode state.
#[derive(Debug, Clone)]
pub struct ShotSampler {
    components: Vec<PureComponent>,
    chooser: WeightedIndex<f64>,
    noise: NoiseModel,
    background: Option<CoherentBackground>,
    base: ChaCha8Rng,
    seed: u64,
}

impl ShotSampler {
    pub fn new(rho: &DensityMatrix, noise: NoiseModel, seed: u64) -> Result<Self> {
        let dims = rho.space().dims();
        if dims.len() != 2 {
            return Err(Error::InvalidDimension(format!("expected a two-mode state, got {} factors", dims.len())));
        }
        let (d1, d2) = (dims[0], dims[1]);
        let (vals, vecs) = eigh(rho.matrix());
        let mut components = Vec::new();
        let mut weights = Vec::new();
        for k in 0..vals.len() {
            if vals[k] > MIN_WEIGHT {
                let psi: Vec<C64> = vecs.column(k).iter().cloned().collect();
                components.push(PureComponent::new(&psi, d1, d2));
                weights.push(vals[k]);
            }
        }
        let chooser = WeightedIndex::new(&weights).map_err(|e| Error::Sampling(format!("{e}")))?;
        Ok(Self { components, chooser, noise, background: None, base: ChaCha8Rng::seed_from_u64(seed), seed })
    }

    /// Drive-on shots are passed through the inverse background model.
    pub fn with_background(mut self, background: CoherentBackground) -> Self {
        self.background = Some(background);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Mean number of proposals per drive-on shot.
    pub fn expected_proposals(&self) -> f64 {
        let total: f64 = (0..self.components.len()).map(|k| self.chooser.weight(k).unwrap_or(0.0)).sum();
        (0..self.components.len())
            .map(|k| self.chooser.weight(k).unwrap_or(0.0) / total * self.components[k].bound)
            .sum()
    }

    fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(id);
        rng.set_word_pos(0);
        rng
    }

    /// Shot pair number `index`: (drive on, drive off).
    pub fn shot(&self, index: u64) -> Result<([C64; 2], [C64; 2])> {
        let noise_sd = libm::sqrt(self.noise.n_added / 2.0);
        let mut rng = self.stream(2 * index);
        let comp = &self.components[self.chooser.sample(&mut rng)];
        let mut on = comp.sample(&mut rng)?;
        if let Some(bg) = &self.background {
            on = bg.to_output(on);
        }
        for s in on.iter_mut() {
            *s += complex_normal(&mut rng, noise_sd);
        }

        let mut rng = self.stream(2 * index + 1);
        let vac_sd = libm::sqrt(0.5);
        let mut off = [C64::zero(); 2];
        for s in off.iter_mut() {
            *s = complex_normal(&mut rng, vac_sd) + complex_normal(&mut rng, noise_sd);
        }
        Ok((on, off))
    }

    /// Feeds shots `range` into `acc` without storing them.
    pub fn accumulate(&self, range: Range<u64>, acc: &mut MomentAccumulator) -> Result<()> {
        for i in range {
            let (on, off) = self.shot(i)?;
            acc.push(i as usize, on, off);
        }
        Ok(())
    }
}

/// `n` interleaved shot pairs from `rho`, deterministic in `seed`.
pub fn synthesize_dataset(rho: &DensityMatrix, noise: NoiseModel, n: usize, seed: u64) -> Result<InterleavedDataset> {
    let sampler = ShotSampler::new(rho, noise, seed)?;
    collect(&sampler, n, noise, seed)
}

/// As [`synthesize_dataset`] with a coherent background on the drive-on
/// records.
pub fn synthesize_with_background(
    rho: &DensityMatrix,
    noise: NoiseModel,
    n: usize,
    seed: u64,
    background: CoherentBackground,
) -> Result<InterleavedDataset> {
    let sampler = ShotSampler::new(rho, noise, seed)?.with_background(background);
    collect(&sampler, n, noise, seed)
}

fn collect(sampler: &ShotSampler, n: usize, noise: NoiseModel, seed: u64) -> Result<InterleavedDataset> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one shot".into()));
    }
    let mut on = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for i in 0..n as u64 {
        let (a, b) = sampler.shot(i)?;
        on.push(a);
        off.push(b);
    }
    InterleavedDataset::new(on, off, seed, noise)
}
