// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Removal of the reflected drive from the recorded modes.
//!
//! The recorded mode `x_k` relates to the emission `a_k` by
//! `a_k = A e^{iφ_A} x_k - B e^{iφ_B} a_in_k`, with `a_in_k` the drive
//! amplitude captured by filter `k`. The same four parameters serve both
//! modes and are fitted so that the first moments and photon numbers of
//! `a_k` match a simulated reference.

use alloc::format;
use alloc::vec::Vec;

use super::denoise::Denoised;
use super::optim::{nelder_mead, NelderMeadOptions};
use crate::dynamics::SystemParams;
use crate::error::{Error, Result};
use crate::filter::TemporalFilter;
use crate::observables::{MomentIndex, MomentVector};
use crate::quantum::C64;

const PHASE_SEEDS: usize = 8;

/// Captured drive amplitude `(Ω/√Γ) ∫ f*(t) dt` at baseband.
pub fn input_mode_amplitude(params: &SystemParams, filter: &TemporalFilter) -> C64 {
    filter.integral().conj() * (params.omega / libm::sqrt(params.gamma))
}

/// Unit-gain background for shot synthesis: a recorded sample is
/// `e^{-iφ_A} (α_k + b_k)` for an emission sample `α_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentBackground {
    pub phase: f64,
    pub offsets: [C64; 2],
}

impl CoherentBackground {
    pub fn new(phase: f64, offsets: [C64; 2]) -> Self {
        Self { phase, offsets }
    }

    /// Offsets `B e^{iφ_B} a_in_k`.
    pub fn from_input(phase_a: f64, b: f64, phase_b: f64, input: [C64; 2]) -> Self {
        let beta = C64::from_polar(b, phase_b);
        Self { phase: phase_a, offsets: [beta * input[0], beta * input[1]] }
    }

    pub fn to_output(&self, emission: [C64; 2]) -> [C64; 2] {
        let rot = C64::from_polar(1.0, -self.phase);
        [rot * (emission[0] + self.offsets[0]), rot * (emission[1] + self.offsets[1])]
    }
}

/// Fitted background parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundFit {
    pub a: f64,
    pub phi_a: f64,
    pub b: f64,
    pub phi_b: f64,
    pub residual: f64,
    /// Captured drive amplitudes `a_in_k`.
    pub input: [C64; 2],
}

fn wrap(phi: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let r = phi - tau * libm::floor(phi / tau);
    if r > core::f64::consts::PI {
        r - tau
    } else {
        r
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |c, i| c * (n - i) as f64 / (i + 1) as f64)
}

fn cpow(z: C64, k: u32) -> C64 {
    (0..k).fold(C64::from(1.0), |acc, _| acc * z)
}

impl BackgroundFit {
    /// `A = 1`, `φ_A = 0`, `B = 0`.
    pub fn identity(input: [C64; 2]) -> Self {
        Self { a: 1.0, phi_a: 0.0, b: 0.0, phi_b: 0.0, residual: 0.0, input }
    }

    pub fn gain(&self) -> C64 {
        C64::from_polar(self.a, self.phi_a)
    }

    pub fn offsets(&self) -> [C64; 2] {
        let beta = C64::from_polar(self.b, self.phi_b);
        [beta * self.input[0], beta * self.input[1]]
    }

    /// Linear coefficients expressing the corrected moment `t` through
    /// recorded moments `s ≤ t`.
    fn coefficients(&self, t: &MomentIndex) -> Vec<(MomentIndex, C64)> {
        let c = self.gain();
        let [b1, b2] = self.offsets();
        let mut out = Vec::new();
        for m1 in 0..=t.m1 {
            for n1 in 0..=t.n1 {
                for m2 in 0..=t.m2 {
                    for n2 in 0..=t.n2 {
                        let k = binomial(t.m1, m1) * binomial(t.n1, n1) * binomial(t.m2, m2) * binomial(t.n2, n2);
                        let coef = cpow(c.conj(), m1 + m2)
                            * cpow(c, n1 + n2)
                            * cpow(-b1.conj(), t.m1 - m1)
                            * cpow(-b1, t.n1 - n1)
                            * cpow(-b2.conj(), t.m2 - m2)
                            * cpow(-b2, t.n2 - n2)
                            * k;
                        out.push((MomentIndex::new(m1, n1, m2, n2), coef));
                    }
                }
            }
        }
        out
    }

    fn transform_with<L>(&self, t: &MomentIndex, lookup: L) -> Option<C64>
    where
        L: Fn(&MomentIndex) -> Option<C64>,
    {
        let mut acc = C64::from(0.0);
        for (s, coef) in self.coefficients(t) {
            let x = if s == MomentIndex::IDENTITY { C64::from(1.0) } else { lookup(&s)? };
            acc += coef * x;
        }
        Some(acc)
    }

    /// Corrected moments of `recorded`, which must hold the downward
    /// closure of its indices. Sigmas propagate linearly, neglecting
    /// correlations between recorded moments.
    pub fn apply(&self, recorded: &MomentVector) -> Result<MomentVector> {
        let mut values = Vec::with_capacity(recorded.len());
        let mut sigmas = Vec::with_capacity(recorded.len());
        for t in recorded.indices() {
            let mut v = C64::from(0.0);
            let mut var = 0.0;
            for (s, coef) in self.coefficients(t) {
                if s == MomentIndex::IDENTITY {
                    v += coef;
                    continue;
                }
                let (x, sx) = recorded.get(&s).ok_or_else(|| Error::MissingMoment(format!("{s}")))?;
                v += coef * x;
                var += coef.norm_sqr() * sx * sx;
            }
            values.push(v);
            sigmas.push(libm::sqrt(var));
        }
        MomentVector::new(recorded.indices().to_vec(), values, sigmas)
    }

    /// Corrected estimates for the full data and every segment.
    pub fn apply_denoised(&self, recorded: &Denoised) -> Denoised {
        recorded.map(|t, look| self.transform_with(t, |s| Some(look(s))).unwrap_or(C64::from(0.0)))
    }

    fn mismatch(&self, recorded: &MomentVector, reference: &[(C64, f64); 2]) -> Option<f64> {
        let look = |s: &MomentIndex| recorded.get(s).map(|(v, _)| v);
        let mut r = 0.0;
        for (k, (first, number)) in [(MomentIndex::new(0, 1, 0, 0), MomentIndex::new(1, 1, 0, 0)), (MomentIndex::new(0, 0, 0, 1), MomentIndex::new(0, 0, 1, 1))]
            .iter()
            .enumerate()
        {
            let a = self.transform_with(first, look)?;
            let n = self.transform_with(number, look)?;
            r += (a - reference[k].0).norm_sqr() + (n.re - reference[k].1) * (n.re - reference[k].1);
        }
        Some(r)
    }
}

/// Fits the background parameters from recorded first- and second-order
/// moments against reference emission moments.
pub fn fit_background(recorded: &MomentVector, input: [C64; 2], reference: &MomentVector) -> Result<BackgroundFit> {
    let firsts = [MomentIndex::new(0, 1, 0, 0), MomentIndex::new(0, 0, 0, 1)];
    let numbers = [MomentIndex::new(1, 1, 0, 0), MomentIndex::new(0, 0, 1, 1)];
    let mut targets = [(C64::from(0.0), 0.0); 2];
    let mut x = [C64::from(0.0); 2];
    for k in 0..2 {
        targets[k] = (reference.value(&firsts[k])?, reference.value(&numbers[k])?.re);
        x[k] = recorded.value(&firsts[k])?;
        recorded.value(&numbers[k])?;
    }
    let fit_at = |p: &[f64]| BackgroundFit { a: p[0].abs(), phi_a: p[1], b: p[2].abs(), phi_b: p[3], residual: 0.0, input };
    let objective = |p: &[f64]| fit_at(p).mismatch(recorded, &targets).unwrap_or(f64::INFINITY);

    let norm_in: f64 = input.iter().map(|z| z.norm_sqr()).sum();
    let opts = NelderMeadOptions::default();
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    for seed in 0..PHASE_SEEDS {
        let phi = core::f64::consts::TAU * seed as f64 / PHASE_SEEDS as f64;
        let c = C64::from_polar(1.0, phi);
        // least-squares drive term given A = 1 and φ_A
        let beta = if norm_in > 1e-300 {
            (0..2).map(|k| input[k].conj() * (c * x[k] - targets[k].0)).sum::<C64>() / norm_in
        } else {
            C64::from(0.0)
        };
        let x0 = [1.0, phi, beta.norm(), beta.arg()];
        let m = nelder_mead(objective, &x0, &[0.1, 0.3, 0.1 + 0.1 * beta.norm(), 0.3], &opts);
        if best.as_ref().is_none_or(|(v, _, _)| m.value < *v) {
            best = Some((m.value, m.x, m.converged));
        }
    }
    let (value, p, converged) = best.ok_or(Error::FitFailed { residual: f64::NAN })?;
    if !converged || !value.is_finite() {
        return Err(Error::FitFailed { residual: value });
    }
    let mut fit = fit_at(&p);
    fit.phi_a = wrap(fit.phi_a);
    fit.phi_b = wrap(fit.phi_b);
    fit.residual = value;
    Ok(fit)
}

/// Fits the background and returns the corrected moments of `recorded`.
pub fn remove_background(
    recorded: &MomentVector,
    params: &SystemParams,
    filters: [&TemporalFilter; 2],
    reference: &MomentVector,
) -> Result<(MomentVector, BackgroundFit)> {
    let input = [input_mode_amplitude(params, filters[0]), input_mode_amplitude(params, filters[1])];
    let fit = fit_background(recorded, input, reference)?;
    Ok((fit.apply(recorded)?, fit))
}
