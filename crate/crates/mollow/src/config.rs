// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration.
//!
//! Configs are TOML files. Frequencies are ordinary frequencies in MHz,
//! times are in ns, and the Rabi frequency is given in units of Γ. Every
//! section and field is optional; omitted values take the defaults below.
//!
//! ```toml
//! seed = 1
//! threads = 0            # 0 uses every available core
//!
//! [physics]
//! gamma_mhz = 8.0        # Γ/2π
//! omega_over_gamma = 4.04
//!
//! [filter]
//! shape = "boxcar"       # or "hermite-gauss"
//! duration_ns = 100.0
//! phase = 0.0
//! delay_ns = 0.0         # applied to the second filter
//!
//! [sim]
//! fock_cutoff = 6
//! t0_ns = 200.0
//! rel_tol = 1e-3
//! # dt_ns = 0.05         # default: min(1/(200Γ), 1/(50Ω), T/2000)
//!
//! [grid]
//! delta1_mhz = { start = -40.0, stop = 40.0, points = 31 }
//! delta2_mhz = { start = -40.0, stop = 40.0, points = 31 }
//! reconstruct = ["ls"]   # reconstruction maps for entangle-map
//! ```
//!
//! The remaining sections (`spectrum`, `delay`, `hg`, `pipeline`,
//! `tomography`) are documented on their structs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mollow_core::dynamics::{SimConfig, SystemParams};
use mollow_core::filter::TemporalFilter;
use mollow_core::observables::{enumerate_moments, MomentIndex};
use mollow_core::tomography::{Method, SolverOptions};
use mollow_core::units::{mhz_to_rad_per_s, ns_to_s, rad_per_s_to_mhz};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub physics: Physics,
    pub filter: FilterSpec,
    pub sim: Sim,
    pub grid: Grid,
    pub spectrum: Spectrum,
    pub delay: Delay,
    pub hg: HermiteGaussStudy,
    pub pipeline: Pipeline,
    pub tomography: Tomography,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 0,
            physics: Physics::default(),
            filter: FilterSpec::default(),
            sim: Sim::default(),
            grid: Grid::default(),
            spectrum: Spectrum::default(),
            delay: Delay::default(),
            hg: HermiteGaussStudy::default(),
            pipeline: Pipeline::default(),
            tomography: Tomography::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    /// Γ/2π in MHz.
    pub gamma_mhz: f64,
    /// Ω/Γ.
    pub omega_over_gamma: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { gamma_mhz: 8.0, omega_over_gamma: 4.04 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Boxcar,
    HermiteGauss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSpec {
    pub shape: Shape,
    /// Boxcar duration.
    pub duration_ns: f64,
    /// Hermite–Gauss width.
    pub width_ns: f64,
    /// Hermite–Gauss orders of the two filters.
    pub orders: [u32; 2],
    /// Common filter phase φ.
    pub phase: f64,
    /// Shift of the second filter.
    pub delay_ns: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self { shape: Shape::Boxcar, duration_ns: 100.0, width_ns: 500.0, orders: [0, 1], phase: 0.0, delay_ns: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim {
    pub fock_cutoff: usize,
    pub dt_ns: Option<f64>,
    pub t0_ns: f64,
    pub rel_tol: f64,
}

impl Default for Sim {
    fn default() -> Self {
        Self { fock_cutoff: 6, dt_ns: None, t0_ns: 200.0, rel_tol: 1e-3 }
    }
}

/// Evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub const fn new(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Ls,
    Cs,
}

impl MethodName {
    pub fn method(self) -> Method {
        match self {
            MethodName::Ls => Method::LeastSquares,
            MethodName::Cs => Method::CompressedSensing,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MethodName::Ls => "ls",
            MethodName::Cs => "cs",
        }
    }
}

/// Two-dimensional detuning maps used by `grid` and `entangle-map`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub delta1_mhz: Axis,
    pub delta2_mhz: Axis,
    /// Reconstruction maps computed by `entangle-map` from exact moments
    /// of the `[tomography]` index set. Compressed sensing on 27 moments
    /// takes seconds per point.
    pub reconstruct: Vec<MethodName>,
}

impl Default for Grid {
    fn default() -> Self {
        Self { delta1_mhz: Axis::new(-40.0, 40.0, 31), delta2_mhz: Axis::new(-40.0, 40.0, 31), reconstruct: vec![MethodName::Ls] }
    }
}

/// Single-mode photon-number sweeps. Empty lists use the `[physics]` and
/// `[filter]` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Spectrum {
    pub delta_mhz: Axis,
    pub omega_over_gamma: Vec<f64>,
    pub duration_ns: Vec<f64>,
}

impl Default for Spectrum {
    fn default() -> Self {
        Self { delta_mhz: Axis::new(-40.0, 40.0, 81), omega_over_gamma: Vec::new(), duration_ns: Vec::new() }
    }
}

/// Delay of the second filter at fixed detunings. Missing detunings
/// default to `(-Ω, +Ω)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Delay {
    pub delay_ns: Axis,
    pub delta1_mhz: Option<f64>,
    pub delta2_mhz: Option<f64>,
}

impl Default for Delay {
    fn default() -> Self {
        Self { delay_ns: Axis::new(-125.0, 125.0, 11), delta1_mhz: None, delta2_mhz: None }
    }
}

/// Hermite–Gauss pair. Widths are given in units of `width_unit_ns`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HermiteGaussStudy {
    pub orders: [u32; 2],
    pub widths: Vec<f64>,
    pub width_unit_ns: f64,
    pub delta1_mhz: Axis,
    pub delta2_mhz: f64,
}

impl Default for HermiteGaussStudy {
    fn default() -> Self {
        Self {
            orders: [0, 1],
            widths: vec![0.5],
            width_unit_ns: 1000.0,
            delta1_mhz: Axis::new(-20.0, 20.0, 9),
            delta2_mhz: 0.0,
        }
    }
}

/// Coherent drive background injected into synthetic records: recorded
/// samples are `e^{-iφ_A}(a_k + B e^{iφ_B} a_in_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub phase_a: f64,
    pub b: f64,
    pub phase_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pipeline {
    pub shots: usize,
    pub n_added: f64,
    pub background: Option<Background>,
    /// Also write every shot to `dataset.csv`.
    pub write_dataset: bool,
}

impl Default for Pipeline {
    fn default() -> Self {
        Self { shots: 1_000_000, n_added: 11.0, background: None, write_dataset: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaSource {
    /// Moments and sigmas from synthetic shots.
    Pipeline,
    /// Exact moments with zero sigmas.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tomography {
    pub methods: Vec<MethodName>,
    /// 27 or 325.
    pub moments: usize,
    pub cutoff: usize,
    pub sigma_source: SigmaSource,
    pub tolerance: f64,
    pub max_iter: usize,
    /// Operating point of `tomo`; defaults to `(-Ω, +Ω)`.
    pub delta1_mhz: Option<f64>,
    pub delta2_mhz: Option<f64>,
}

impl Default for Tomography {
    fn default() -> Self {
        let solver = SolverOptions::default();
        Self {
            methods: vec![MethodName::Ls, MethodName::Cs],
            moments: 27,
            cutoff: 5,
            sigma_source: SigmaSource::Pipeline,
            tolerance: solver.tolerance,
            max_iter: solver.max_iter,
            delta1_mhz: None,
            delta2_mhz: None,
        }
    }
}

impl Tomography {
    pub fn indices(&self) -> Vec<MomentIndex> {
        match self.moments {
            325 => enumerate_moments(4, None, true),
            _ => enumerate_moments(2, Some(4), false),
        }
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { tolerance: self.tolerance, max_iter: self.max_iter }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing config")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Fills detuning defaults that depend on Ω and checks every value.
    pub fn resolve(mut self) -> Result<Self> {
        let omega_mhz = self.physics.gamma_mhz * self.physics.omega_over_gamma;
        self.delay.delta1_mhz.get_or_insert(-omega_mhz);
        self.delay.delta2_mhz.get_or_insert(omega_mhz);
        self.tomography.delta1_mhz.get_or_insert(-omega_mhz);
        self.tomography.delta2_mhz.get_or_insert(omega_mhz);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.sim_config().validate()?;
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be > 0, got {v}");
            }
            Ok(())
        };
        positive("filter.duration_ns", self.filter.duration_ns)?;
        positive("filter.width_ns", self.filter.width_ns)?;
        positive("hg.width_unit_ns", self.hg.width_unit_ns)?;
        for &w in &self.hg.widths {
            positive("hg.widths", w)?;
        }
        for &t in &self.spectrum.duration_ns {
            positive("spectrum.duration_ns", t)?;
        }
        for (name, axis) in [
            ("grid.delta1_mhz", &self.grid.delta1_mhz),
            ("grid.delta2_mhz", &self.grid.delta2_mhz),
            ("spectrum.delta_mhz", &self.spectrum.delta_mhz),
            ("delay.delay_ns", &self.delay.delay_ns),
            ("hg.delta1_mhz", &self.hg.delta1_mhz),
        ] {
            if axis.points == 0 || !axis.start.is_finite() || !axis.stop.is_finite() {
                bail!("{name} must be a non-empty finite axis");
            }
        }
        if self.hg.widths.is_empty() {
            bail!("hg.widths must not be empty");
        }
        if !(self.pipeline.n_added >= 0.0 && self.pipeline.n_added.is_finite()) {
            bail!("pipeline.n_added must be >= 0");
        }
        if self.tomography.moments != 27 && self.tomography.moments != 325 {
            bail!("tomography.moments must be 27 or 325, got {}", self.tomography.moments);
        }
        if self.tomography.cutoff < 5 && self.tomography.moments == 325 {
            bail!("the 325-moment set needs a cutoff of at least 5");
        }
        if self.tomography.cutoff < 3 {
            bail!("tomography.cutoff must be >= 3");
        }
        if self.tomography.cutoff > self.sim.fock_cutoff {
            bail!("tomography.cutoff {} exceeds sim.fock_cutoff {}", self.tomography.cutoff, self.sim.fock_cutoff);
        }
        if self.tomography.methods.is_empty() {
            bail!("tomography.methods must not be empty");
        }
        positive("tomography.tolerance", self.tomography.tolerance)?;
        Ok(())
    }

    pub fn params(&self) -> Result<SystemParams> {
        let gamma = mhz_to_rad_per_s(self.physics.gamma_mhz);
        Ok(SystemParams::new(gamma, self.physics.omega_over_gamma * gamma)?)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            fock_cutoff: self.sim.fock_cutoff,
            dt: self.sim.dt_ns.map(ns_to_s),
            t0: ns_to_s(self.sim.t0_ns),
            rel_tol: self.sim.rel_tol,
        }
    }

    /// Ω/2π in MHz.
    pub fn omega_mhz(&self) -> f64 {
        self.params().map(|p| rad_per_s_to_mhz(p.omega)).unwrap_or(f64::NAN)
    }

    /// Filter pair at the given detunings, positioned after the
    /// steady-state wait. The second filter carries the configured delay.
    pub fn filters(&self, delta1_mhz: f64, delta2_mhz: f64) -> Result<[TemporalFilter; 2]> {
        let t0 = ns_to_s(self.sim.t0_ns);
        let f = &self.filter;
        let make = |k: usize, det: f64| -> Result<TemporalFilter> {
            let det = mhz_to_rad_per_s(det);
            let filter = match f.shape {
                Shape::Boxcar => TemporalFilter::boxcar(ns_to_s(f.duration_ns), det)?.with_start(t0),
                Shape::HermiteGauss => {
                    let w = ns_to_s(f.width_ns);
                    TemporalFilter::hermite_gauss(f.orders[k], w, det)?.with_start(t0 + HG_HALF_WINDOWS * w)
                }
            };
            Ok(filter.with_phase(f.phase))
        };
        Ok([make(0, delta1_mhz)?, make(1, delta2_mhz)?.with_delay(ns_to_s(f.delay_ns))])
    }
}

/// Half support of a Hermite–Gauss window in widths.
pub const HG_HALF_WINDOWS: f64 = 6.0;
