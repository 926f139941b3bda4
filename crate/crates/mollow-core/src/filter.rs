// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Temporal mode filters and the virtual-cavity couplings derived from them.
//!
//! A filter is `f(t) = v(t) exp(i (Δ t + φ))` in the frame rotating at the
//! drive frequency, with a real envelope `v` normalized so that
//! `∫ |f|² dt = 1`. The matching virtual cavity is coupled with
//! `g(t) = -f(t) / sqrt(∫_start^t |f|² dt')`.

use alloc::format;

use crate::error::{Error, Result};
use crate::quad;
use crate::quantum::C64;

/// Hermite–Gauss envelopes are cut at `center ± HG_HALF_SUPPORT * width`.
pub const HG_HALF_SUPPORT: f64 = 6.0;

/// Coupling magnitudes are capped at `COUPLING_CAP / sqrt(window length)`.
pub const COUPLING_CAP: f64 = 1e3;

/// Absolute tolerance used by the overlap and normalization quadratures.
pub const QUAD_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterShape {
    /// Flat envelope of the given duration (s).
    Boxcar { duration: f64 },
    /// `H_n(x) exp(-x²/2)` with `x = (t - center) / width`.
    HermiteGauss { order: u32, width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalFilter {
    shape: FilterShape,
    detuning: f64,
    phase: f64,
    start: f64,
    delay: f64,
    // 1/sqrt(∫ raw envelope²) for Hermite–Gauss, 1/sqrt(T) for boxcars.
    scale: f64,
}

impl TemporalFilter {
    /// Boxcar of `duration` seconds at `detuning` rad/s from the emitter.
    pub fn boxcar(duration: f64, detuning: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter(format!("boxcar duration must be > 0, got {duration}")));
        }
        check_finite("detuning", detuning)?;
        Ok(Self {
            shape: FilterShape::Boxcar { duration },
            detuning,
            phase: 0.0,
            start: 0.0,
            delay: 0.0,
            scale: 1.0 / libm::sqrt(duration),
        })
    }

    /// Hermite–Gauss mode of the given order and width (s). The
    /// normalization is computed by quadrature over the truncated support.
    pub fn hermite_gauss(order: u32, width: f64, detuning: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!("Hermite-Gauss width must be > 0, got {width}")));
        }
        check_finite("detuning", detuning)?;
        let raw = quad::integrate_real(
            |x| {
                let v = hermite_gauss_raw(order, x);
                v * v
            },
            -HG_HALF_SUPPORT,
            HG_HALF_SUPPORT,
            1e-13,
        );
        // raw is over the dimensionless variable; dt = width dx
        let norm = raw * width;
        Ok(Self {
            shape: FilterShape::HermiteGauss { order, width },
            detuning,
            phase: 0.0,
            start: 0.0,
            delay: 0.0,
            scale: 1.0 / libm::sqrt(norm),
        })
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    /// Reference time: the window start for a boxcar and the center for a
    /// Hermite–Gauss mode.
    pub fn with_start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    /// Extra shift applied on top of the start time.
    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = delay;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn shape(&self) -> FilterShape {
        self.shape
    }

    pub fn detuning(&self) -> f64 {
        self.detuning
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Support `[begin, end]` of the envelope.
    pub fn window(&self) -> (f64, f64) {
        let t = self.start + self.delay;
        match self.shape {
            FilterShape::Boxcar { duration } => (t, t + duration),
            FilterShape::HermiteGauss { width, .. } => {
                (t - HG_HALF_SUPPORT * width, t + HG_HALF_SUPPORT * width)
            }
        }
    }

    pub fn window_length(&self) -> f64 {
        let (a, b) = self.window();
        b - a
    }

    /// Real envelope `v(t)`.
    pub fn envelope(&self, t: f64) -> f64 {
        let (a, b) = self.window();
        if t < a || t > b {
            return 0.0;
        }
        match self.shape {
            FilterShape::Boxcar { .. } => self.scale,
            FilterShape::HermiteGauss { order, width } => {
                let x = (t - self.start - self.delay) / width;
                self.scale * hermite_gauss_raw(order, x)
            }
        }
    }

    /// Carrier `exp(i (Δ t + φ))`.
    pub fn carrier(&self, t: f64) -> C64 {
        C64::from_polar(1.0, self.detuning * t + self.phase)
    }

    pub fn value(&self, t: f64) -> C64 {
        let v = self.envelope(t);
        if v == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.carrier(t) * v
    }

    /// `∫_{window start}^t |f|² dt'`.
    pub fn cumulative_norm(&self, t: f64) -> f64 {
        let (a, b) = self.window();
        if t <= a {
            return 0.0;
        }
        let t = t.min(b);
        match self.shape {
            FilterShape::Boxcar { duration } => (t - a) / duration,
            FilterShape::HermiteGauss { .. } => self.norm_increment_adaptive(a, t),
        }
    }

    /// `∫_from^to |f|² dt` using a single Gauss–Legendre panel, for short
    /// increments.
    pub fn norm_increment(&self, from: f64, to: f64) -> f64 {
        let (a, b) = self.window();
        let lo = from.max(a);
        let hi = to.min(b);
        if hi <= lo {
            return 0.0;
        }
        match self.shape {
            FilterShape::Boxcar { duration } => (hi - lo) / duration,
            FilterShape::HermiteGauss { .. } => quad::gauss_legendre8(
                |t| {
                    let v = self.envelope(t);
                    v * v
                },
                lo,
                hi,
            ),
        }
    }

    fn norm_increment_adaptive(&self, lo: f64, hi: f64) -> f64 {
        quad::integrate_real(
            |t| {
                let v = self.envelope(t);
                v * v
            },
            lo,
            hi,
            1e-13,
        )
    }

    /// `∫ f(t) dt` over the window.
    pub fn integral(&self) -> C64 {
        let (a, b) = self.window();
        match self.shape {
            FilterShape::Boxcar { duration } => {
                let w = self.detuning;
                let base = if w.abs() * duration < 1e-9 {
                    C64::from_polar(duration, w * a)
                } else {
                    (C64::from_polar(1.0, w * b) - C64::from_polar(1.0, w * a)) / C64::new(0.0, w)
                };
                base * C64::from_polar(self.scale, self.phase)
            }
            FilterShape::HermiteGauss { .. } => quad::integrate(|t| self.value(t), a, b, QUAD_TOL).0,
        }
    }

    /// Coupling of the matching virtual cavity given the accumulated norm
    /// `cum = ∫_start^t |f|²`.
    pub fn coupling_from_norm(&self, t: f64, cum: f64) -> C64 {
        let (a, b) = self.window();
        if t < a || t > b {
            return C64::new(0.0, 0.0);
        }
        let cap = COUPLING_CAP / libm::sqrt(self.window_length());
        let f = self.value(t);
        if cum <= 0.0 {
            let v = self.envelope(t);
            if v == 0.0 {
                return C64::new(0.0, 0.0);
            }
            return -self.carrier(t) * cap.copysign(v);
        }
        let g = -f / libm::sqrt(cum);
        let mag = g.norm();
        if mag > cap {
            g * (cap / mag)
        } else {
            g
        }
    }
}

/// `f(t)` of the filter.
pub fn filter_value(f: &TemporalFilter, t: f64) -> C64 {
    f.value(t)
}

/// `∫ f1*(t) f2(t) dt`, by adaptive quadrature over the common support.
pub fn overlap(f1: &TemporalFilter, f2: &TemporalFilter) -> C64 {
    let (a1, b1) = f1.window();
    let (a2, b2) = f2.window();
    let lo = a1.max(a2);
    let hi = b1.min(b2);
    if hi <= lo {
        return C64::new(0.0, 0.0);
    }
    quad::integrate(|t| f1.value(t).conj() * f2.value(t), lo, hi, QUAD_TOL).0
}

/// Virtual-cavity coupling `g(t) = -f(t) / sqrt(∫_start^t |f|²)`; zero
/// outside the filter window.
pub fn coupling_g(f: &TemporalFilter, t: f64) -> C64 {
    f.coupling_from_norm(t, f.cumulative_norm(t))
}

/// Evaluates `g(t)` along a monotone sequence of times, accumulating the
/// running norm incrementally.
#[derive(Debug, Clone)]
pub struct CouplingTrack<'a> {
    filter: &'a TemporalFilter,
    last_t: f64,
    cum: f64,
}

impl<'a> CouplingTrack<'a> {
    pub fn new(filter: &'a TemporalFilter) -> Self {
        let (a, _) = filter.window();
        Self { filter, last_t: a, cum: 0.0 }
    }

    pub fn at(&mut self, t: f64) -> C64 {
        if t < self.last_t {
            self.cum = self.filter.cumulative_norm(t);
        } else {
            self.cum += self.filter.norm_increment(self.last_t, t);
        }
        self.last_t = t;
        self.filter.coupling_from_norm(t, self.cum)
    }
}

/// Physicists' Hermite polynomial times the Gaussian, unnormalized.
fn hermite_gauss_raw(order: u32, x: f64) -> f64 {
    hermite(order, x) * libm::exp(-0.5 * x * x)
}

fn hermite(order: u32, x: f64) -> f64 {
    let mut h0 = 1.0;
    if order == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for n in 1..order {
        let h2 = 2.0 * x * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{mhz_to_rad_per_s, ns_to_s};
    use proptest::prelude::*;

    fn t100() -> f64 {
        ns_to_s(100.0)
    }

    #[test]
    fn boxcar_values() {
        let f = TemporalFilter::boxcar(t100(), 0.0).unwrap().with_start(ns_to_s(200.0));
        assert_eq!(f.value(ns_to_s(150.0)), C64::new(0.0, 0.0));
        assert_eq!(f.value(ns_to_s(301.0)), C64::new(0.0, 0.0));
        let inside = f.value(ns_to_s(250.0));
        assert!((inside.re - 1.0 / t100().sqrt()).abs() < 1e-9 * inside.re);
        assert!(inside.im.abs() < 1e-12);
    }

    #[test]
    fn hermite_gauss_odd_vanishes_at_center() {
        let f = TemporalFilter::hermite_gauss(1, ns_to_s(50.0), 0.0).unwrap().with_start(ns_to_s(500.0));
        assert_eq!(f.value(ns_to_s(500.0)).norm(), 0.0);
    }

    #[test]
    fn hermite_polynomials() {
        assert_eq!(hermite(2, 1.5), 4.0 * 2.25 - 2.0);
        assert_eq!(hermite(3, 0.5), 8.0 * 0.125 - 12.0 * 0.5);
    }

    #[test]
    fn normalization_by_quadrature() {
        let shapes = [
            TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(13.0)).unwrap(),
            TemporalFilter::hermite_gauss(0, ns_to_s(40.0), 0.0).unwrap(),
            TemporalFilter::hermite_gauss(1, ns_to_s(40.0), 0.0).unwrap(),
            TemporalFilter::hermite_gauss(3, ns_to_s(500.0), 1e7).unwrap(),
        ];
        for f in shapes.iter() {
            let (a, b) = f.window();
            let n = quad::integrate_real(|t| f.value(t).norm_sqr(), a, b, 1e-12);
            assert!((n - 1.0).abs() < 1e-6, "norm {n}");
            assert!((f.cumulative_norm(b) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn boxcars_ten_mhz_apart_are_orthogonal() {
        let f1 = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(-5.0)).unwrap().with_start(ns_to_s(200.0));
        let f2 = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(5.0)).unwrap().with_start(ns_to_s(200.0));
        assert!(overlap(&f1, &f2).norm() < 1e-8);
        let f3 = f2.clone().with_detuning(mhz_to_rad_per_s(25.0));
        assert!(overlap(&f1, &f3).norm() < 1e-8);
    }

    #[test]
    fn self_overlap_is_one() {
        let f = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(32.0)).unwrap().with_phase(0.4);
        assert!((overlap(&f, &f) - 1.0).norm() < 1e-9);
        let h = TemporalFilter::hermite_gauss(2, ns_to_s(80.0), 3e7).unwrap();
        assert!((overlap(&h, &h) - 1.0).norm() < 1e-9);
    }

    #[test]
    fn hermite_gauss_pair_orthogonal() {
        let w = ns_to_s(500.0);
        let h0 = TemporalFilter::hermite_gauss(0, w, 0.0).unwrap().with_start(3e-6);
        let h1 = TemporalFilter::hermite_gauss(1, w, 0.0).unwrap().with_start(3e-6);
        assert!(overlap(&h0, &h1).norm() < 1e-8);
    }

    #[test]
    fn boxcar_coupling_magnitudes() {
        let t0 = ns_to_s(200.0);
        let f = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(-32.0)).unwrap().with_start(t0);
        let end = coupling_g(&f, t0 + t100());
        assert!((end.norm() - 1.0 / t100().sqrt()).abs() < 1e-6 / t100().sqrt());
        let quarter = coupling_g(&f, t0 + 0.25 * t100());
        assert!((quarter.norm() - 2.0 / t100().sqrt()).abs() < 1e-6 / t100().sqrt());
        assert_eq!(coupling_g(&f, t0 - 1e-9), C64::new(0.0, 0.0));
        // closed form -e^{i(Δt+φ)}/sqrt(t - t0)
        let t = t0 + 0.6 * t100();
        let want = -C64::from_polar(1.0, f.detuning() * t) / (t - t0).sqrt();
        assert!((coupling_g(&f, t) - want).norm() < 1e-9 * want.norm());
    }

    #[test]
    fn coupling_is_capped_at_window_start() {
        let f = TemporalFilter::boxcar(t100(), 0.0).unwrap();
        let g = coupling_g(&f, 0.0);
        assert!((g.norm() - COUPLING_CAP / t100().sqrt()).abs() < 1e-6 * g.norm());
    }

    #[test]
    fn track_matches_direct_evaluation() {
        let f = TemporalFilter::hermite_gauss(1, ns_to_s(60.0), 2e7).unwrap().with_start(1e-6);
        let (a, b) = f.window();
        let mut track = CouplingTrack::new(&f);
        for k in 1..=400 {
            let t = a + (b - a) * k as f64 / 400.0;
            let g1 = track.at(t);
            let g2 = coupling_g(&f, t);
            assert!((g1 - g2).norm() <= 1e-7 * (1.0 + g2.norm()), "{g1} vs {g2} at {k}");
        }
    }

    #[test]
    fn boxcar_integral_closed_form() {
        let f = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(7.0)).unwrap().with_start(2e-7).with_phase(0.3);
        let (a, b) = f.window();
        let num = quad::integrate(|t| f.value(t), a, b, 1e-14).0;
        assert!((num - f.integral()).norm() < 1e-10);
    }

    #[test]
    fn invalid_parameters() {
        assert!(TemporalFilter::boxcar(0.0, 0.0).is_err());
        assert!(TemporalFilter::boxcar(-1.0, 0.0).is_err());
        assert!(TemporalFilter::hermite_gauss(0, 0.0, 0.0).is_err());
        assert!(TemporalFilter::boxcar(1e-7, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn coupling_consistent_with_definition(frac in 0.01f64..1.0, det in -50.0f64..50.0) {
            let f = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(det)).unwrap().with_start(2e-7);
            let t = 2e-7 + frac * t100();
            let g = coupling_g(&f, t);
            let lhs = g.norm_sqr() * f.cumulative_norm(t);
            let rhs = f.value(t).norm_sqr();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
        }

        #[test]
        fn overlap_conjugate_symmetric(d1 in -40.0f64..40.0, d2 in -40.0f64..40.0, p in 0.0f64..6.0) {
            let f1 = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(d1)).unwrap().with_phase(p);
            let f2 = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(d2)).unwrap();
            let o12 = overlap(&f1, &f2);
            let o21 = overlap(&f2, &f1);
            prop_assert!((o12 - o21.conj()).norm() < 1e-10);
        }

        #[test]
        fn boxcar_overlap_is_sinc(d1 in -40.0f64..40.0, d2 in -40.0f64..40.0) {
            let f1 = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(d1)).unwrap().with_start(2e-7);
            let f2 = TemporalFilter::boxcar(t100(), mhz_to_rad_per_s(d2)).unwrap().with_start(2e-7);
            let x = mhz_to_rad_per_s(d2 - d1) * t100() / 2.0;
            let sinc = if x.abs() < 1e-12 { 1.0 } else { (x.sin() / x).abs() };
            prop_assert!((overlap(&f1, &f2).norm() - sinc).abs() < 1e-6);
        }

        #[test]
        fn hermite_gauss_normalized(order in 0u32..5, width_ns in 10.0f64..800.0) {
            let f = TemporalFilter::hermite_gauss(order, ns_to_s(width_ns), 0.0).unwrap();
            let (a, b) = f.window();
            let n = quad::integrate_real(|t| f.value(t).norm_sqr(), a, b, 1e-12);
            prop_assert!((n - 1.0).abs() < 1e-6);
        }
    }
}
