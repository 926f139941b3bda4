// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Boundary unit conversions. Configuration files speak MHz and ns; every
//! computation inside the crate uses SI angular units (rad/s and s).

use core::f64::consts::TAU;

/// Ordinary frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad_per_s(mhz: f64) -> f64 {
    TAU * 1e6 * mhz
}

pub fn rad_per_s_to_mhz(omega: f64) -> f64 {
    omega / (TAU * 1e6)
}

pub fn ns_to_s(ns: f64) -> f64 {
    ns * 1e-9
}

pub fn s_to_ns(s: f64) -> f64 {
    s * 1e9
}

pub fn us_to_s(us: f64) -> f64 {
    us * 1e-6
}
