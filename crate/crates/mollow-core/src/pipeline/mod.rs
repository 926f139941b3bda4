// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Synthetic heterodyne records, moment denoising and coherent-background
//! removal.
//!
//! The measured quantity per mode is `S = a + h†` with `h` a thermal noise
//! mode of `n_added` photons. Interleaved drive-off records, where `a` is in
//! vacuum, calibrate the noise moments.

pub mod background;
pub mod denoise;
pub mod optim;
pub mod synth;

pub use background::{fit_background, input_mode_amplitude, remove_background, BackgroundFit, CoherentBackground};
pub use denoise::{
    denoise_estimate, denoise_first_second, denoise_general, downward_closure, Denoised, MomentAccumulator, RawMoments,
    FIRST_SECOND, MAX_NOISE_ORDER, MIN_SHOTS, SEGMENTS,
};
pub use optim::{nelder_mead, Minimum, NelderMeadOptions};
pub use synth::{synthesize_dataset, synthesize_with_background, InterleavedDataset, ShotSampler};

use alloc::format;

use crate::error::{Error, Result};

/// Added-noise model of the amplification chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Added noise photons per mode.
    pub n_added: f64,
}

impl NoiseModel {
    pub fn new(n_added: f64) -> Result<Self> {
        if !(n_added >= 0.0 && n_added.is_finite()) {
            return Err(Error::InvalidParameter(format!("n_added must be >= 0, got {n_added}")));
        }
        Ok(Self { n_added })
    }
}

/// `η = 1/2 / (1/2 + n_added)`.
pub fn quantum_efficiency(noise: &NoiseModel) -> f64 {
    0.5 / (0.5 + noise.n_added)
}
