// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Qubit and cascaded virtual-cavity master equations.
//!
//! The cascaded equation for a resonantly driven emitter feeding `K`
//! virtual cavities is
//!
//! ```text
//! dρ/dt = -i[H, ρ] + Γ/2 D[σ]ρ + Σ_k |g_k|²/2 D[a_k]ρ
//!         - Σ_k √Γ (g_k* [a_k†, σρ] + g_k [ρσ†, a_k])
//! ```
//!
//! with `H = -iΩ(σ† - σ)/2`. Every operator involved moves each basis state
//! to at most one other basis state, so the right-hand side is evaluated
//! directly on the flat density matrix instead of through a superoperator.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::filter::{CouplingTrack, TemporalFilter};
use crate::quantum::{
    annihilation, eigh, embed, hermitize, partial_trace, CMatrix, DensityMatrix, HilbertSpace, Operator, C64,
};

/// Largest accepted `|Tr ρ - 1|` during integration.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Top Fock-level population above which the cutoff is flagged.
pub const CUTOFF_WARNING_LEVEL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Emitter decay rate Γ (rad/s).
    pub gamma: f64,
    /// Rabi frequency Ω (rad/s). The drive is resonant.
    pub omega: f64,
}

impl SystemParams {
    pub fn new(gamma: f64, omega: f64) -> Result<Self> {
        let p = Self { gamma, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("omega must be >= 0, got {}", self.omega)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Fock levels kept per virtual cavity.
    pub fock_cutoff: usize,
    /// Integrator step (s); `None` selects [`default_dt`].
    pub dt: Option<f64>,
    /// Steady-state waiting time (s). Filters are positioned relative to
    /// it by the caller.
    pub t0: f64,
    /// Relative tolerance of the step-halving check.
    pub rel_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { fock_cutoff: 6, dt: None, t0: 200e-9, rel_tol: 1e-3 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fock_cutoff < 3 {
            return Err(Error::InvalidParameter(format!("fock cutoff must be >= 3, got {}", self.fock_cutoff)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
            }
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(Error::InvalidParameter(format!("t0 must be >= 0, got {}", self.t0)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        Ok(())
    }
}

/// `min(1/(200Γ), 1/(50Ω), T/2000)` with `T` the shortest filter window.
pub fn default_dt(params: &SystemParams, filters: &[&TemporalFilter]) -> f64 {
    let mut dt = 1.0 / (200.0 * params.gamma);
    if params.omega > 0.0 {
        dt = dt.min(1.0 / (50.0 * params.omega));
    }
    for f in filters {
        dt = dt.min(f.window_length() / 2000.0);
    }
    dt
}

fn pauli_lowering() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(0, 1)] = C64::new(1.0, 0.0);
    s
}

/// Dense superoperator of the cascaded equation at fixed couplings, acting
/// on row-major `vec(ρ)`. Built term by term from the commutator form; the
/// qubit-only Liouvillian is the case `couplings = []`.
///
/// The size is `(2 Nc^K)²` squared, so this is meant for small cutoffs.
pub fn cascaded_superoperator(params: &SystemParams, couplings: &[C64], cutoff: usize) -> Result<CMatrix> {
    let mut dims = vec![2usize];
    dims.extend(core::iter::repeat_n(cutoff, couplings.len()));
    let space = HilbertSpace::new(&dims)?;
    let d = space.total();
    let id = CMatrix::identity(d, d);
    let qubit = HilbertSpace::new(&[2])?;
    let sigma = embed(&Operator::new(qubit, pauli_lowering())?, 0, &space)?.into_matrix();
    let sigma_dag = sigma.adjoint();
    let i = C64::new(0.0, 1.0);
    let h = (&sigma_dag - &sigma) * (-i * (params.omega / 2.0));

    let left = |a: &CMatrix| a.kronecker(&id);
    let right = |b: &CMatrix| id.kronecker(&b.transpose());
    let sandwich = |a: &CMatrix, b: &CMatrix| a.kronecker(&b.transpose());
    let dissipator = |a: &CMatrix| {
        let ada = a.adjoint() * a;
        sandwich(a, &a.adjoint()) * C64::new(2.0, 0.0) - left(&ada) - right(&ada)
    };

    let mut l = (left(&h) - right(&h)) * (-i);
    l += dissipator(&sigma) * C64::new(params.gamma / 2.0, 0.0);
    let sg = libm::sqrt(params.gamma);
    for (k, &g) in couplings.iter().enumerate() {
        let a = embed(&annihilation(cutoff)?, k + 1, &space)?.into_matrix();
        let a_dag = a.adjoint();
        l += dissipator(&a) * C64::new(g.norm_sqr() / 2.0, 0.0);
        // [a†, σρ] = a†σρ - σρa†
        let c1 = left(&(&a_dag * &sigma)) - sandwich(&sigma, &a_dag);
        // [ρσ†, a] = ρσ†a - aρσ†
        let c2 = right(&(&sigma_dag * &a)) - sandwich(&a, &sigma_dag);
        l -= (c1 * g.conj() + c2 * g) * C64::new(sg, 0.0);
    }
    Ok(l)
}

/// Steady state of the driven, damped qubit as the normalized null vector
/// of its 4×4 Liouvillian.
pub fn qubit_steady_state(params: &SystemParams) -> Result<DensityMatrix> {
    params.validate()?;
    let l = cascaded_superoperator(params, &[], 2)?;
    let svd = l.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::InvalidState("SVD failed".into()))?;
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1e-300);
    let null: Vec<usize> = (0..4).filter(|&k| svd.singular_values[k] <= tol).collect();
    if null.len() > 1 {
        return Err(Error::AmbiguousSteadyState(null.len()));
    }
    let k = svd.singular_values.imin();
    // rows of V^dagger are right singular vectors (conjugated)
    let v: Vec<C64> = (0..4).map(|j| v_t[(k, j)].conj()).collect();
    let mut rho = CMatrix::from_row_slice(2, 2, &v);
    let tr = rho.trace();
    rho /= tr;
    DensityMatrix::from_matrix_clamped(HilbertSpace::new(&[2])?, rho)
}

/// Fixed-step RK4 for a constant superoperator acting on row-major `vec(ρ)`.
pub fn propagate_dense(l: &CMatrix, rho: &CMatrix, duration: f64, steps: usize) -> CMatrix {
    let n = rho.nrows();
    let steps = steps.max(1);
    let h = duration / steps as f64;
    let mut v = DVector::from_iterator(n * n, rho.transpose().iter().cloned());
    for _ in 0..steps {
        let k1 = l * &v;
        let k2 = l * (&v + &k1 * C64::from(h / 2.0));
        let k3 = l * (&v + &k2 * C64::from(h / 2.0));
        let k4 = l * (&v + &k3 * C64::from(h));
        v += (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
    }
    CMatrix::from_row_slice(n, n, v.as_slice())
}

/// Operator mapping each basis state to at most one basis state:
/// `X|j> = coeff[j] |target[j]>`.
#[derive(Debug, Clone)]
struct Ladder {
    entries: Vec<(usize, usize, C64)>,
}

impl Ladder {
    fn on_factor(local: &CMatrix, factor: usize, space: &HilbertSpace) -> Self {
        let dims = space.dims();
        let stride = space.stride(factor);
        let dim = dims[factor];
        let mut entries = Vec::new();
        for j in 0..space.total() {
            let digit = (j / stride) % dim;
            for r in 0..dim {
                let c = local[(r, digit)];
                if c != C64::zero() {
                    let target = j + r * stride - digit * stride;
                    entries.push((j, target, c));
                }
            }
        }
        Self { entries }
    }

    fn dagger(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(j, t, c)| (t, j, c.conj())).collect();
        entries.sort_by_key(|e| e.0);
        Self { entries }
    }

    /// `self ∘ inner`.
    fn after(&self, inner: &Ladder, dim: usize) -> Self {
        let mut map = vec![None; dim];
        for &(j, t, c) in &self.entries {
            map[j] = Some((t, c));
        }
        let entries = inner
            .entries
            .iter()
            .filter_map(|&(j, t, c)| map[t].map(|(t2, c2)| (j, t2, c2 * c)))
            .collect();
        Self { entries }
    }
}

#[derive(Debug, Clone)]
struct ModeOps {
    a: Ladder,
    a_dag_sigma: Ladder,
    number: Vec<f64>,
}

/// Sparse right-hand side of the cascaded master equation on
/// `[2, Nc, ..., Nc]`, acting on row-major flat density matrices.
#[derive(Debug, Clone)]
pub struct CascadedGenerator {
    space: HilbertSpace,
    gamma: f64,
    omega: f64,
    sigma: Ladder,
    sigma_dag: Ladder,
    excited: Vec<f64>,
    modes: Vec<ModeOps>,
}

impl CascadedGenerator {
    pub fn new(params: &SystemParams, cutoffs: &[usize]) -> Result<Self> {
        params.validate()?;
        let mut dims = vec![2usize];
        dims.extend_from_slice(cutoffs);
        let space = HilbertSpace::new(&dims)?;
        let d = space.total();
        let sigma = Ladder::on_factor(&pauli_lowering(), 0, &space);
        let sigma_dag = sigma.dagger();
        let excited = (0..d).map(|j| ((j / space.stride(0)) % 2) as f64).collect();
        let mut modes = Vec::with_capacity(cutoffs.len());
        for (k, &nc) in cutoffs.iter().enumerate() {
            let a = Ladder::on_factor(annihilation(nc)?.matrix(), k + 1, &space);
            let a_dag_sigma = a.dagger().after(&sigma, d);
            let stride = space.stride(k + 1);
            let number = (0..d).map(|j| ((j / stride) % nc) as f64).collect();
            modes.push(ModeOps { a, a_dag_sigma, number });
        }
        Ok(Self { space, gamma: params.gamma, omega: params.omega, sigma, sigma_dag, excited, modes })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total()
    }

    /// `out = dρ/dt` for the given couplings (one per cavity). `rho` must be
    /// Hermitian; the result is exactly Hermitian.
    pub fn eval(&self, couplings: &[C64], rho: &[C64], out: &mut [C64]) {
        let d = self.dim();
        debug_assert_eq!(couplings.len(), self.modes.len());
        debug_assert_eq!(rho.len(), d * d);
        let sg = libm::sqrt(self.gamma);

        // W = Lρ + Σ √Γ g* σρa†, with L = -iH - Γ/2 σ†σ - Σ|g|²/2 n - Σ √Γ g* a†σ
        for i in 0..d {
            let mut diag = -0.5 * self.gamma * self.excited[i];
            for (m, g) in self.modes.iter().zip(couplings) {
                diag -= 0.5 * g.norm_sqr() * m.number[i];
            }
            let (src, dst) = (&rho[i * d..(i + 1) * d], &mut out[i * d..(i + 1) * d]);
            for (o, &r) in dst.iter_mut().zip(src) {
                *o = r * diag;
            }
        }
        if self.omega != 0.0 {
            left(out, rho, d, &self.sigma, C64::from(0.5 * self.omega));
            left(out, rho, d, &self.sigma_dag, C64::from(-0.5 * self.omega));
        }
        for (m, g) in self.modes.iter().zip(couplings) {
            if *g == C64::zero() {
                continue;
            }
            let c = g.conj() * sg;
            left(out, rho, d, &m.a_dag_sigma, -c);
            sandwich(out, rho, d, &self.sigma, &m.a, c);
        }
        // W + W†
        for i in 0..d {
            out[i * d + i] = C64::from(2.0 * out[i * d + i].re);
            for j in i + 1..d {
                let s = out[i * d + j] + out[j * d + i].conj();
                out[i * d + j] = s;
                out[j * d + i] = s.conj();
            }
        }
        sandwich(out, rho, d, &self.sigma, &self.sigma, C64::from(self.gamma));
        for (m, g) in self.modes.iter().zip(couplings) {
            let w = g.norm_sqr();
            if w != 0.0 {
                sandwich(out, rho, d, &m.a, &m.a, C64::from(w));
            }
        }
    }
}

/// `out += c · X ρ`.
fn left(out: &mut [C64], rho: &[C64], d: usize, x: &Ladder, c: C64) {
    for &(j, t, cx) in &x.entries {
        let f = c * cx;
        let (src, dst) = (&rho[j * d..(j + 1) * d], t * d);
        for (l, &r) in src.iter().enumerate() {
            out[dst + l] += f * r;
        }
    }
}

/// `out += c · X ρ Y†`.
fn sandwich(out: &mut [C64], rho: &[C64], d: usize, x: &Ladder, y: &Ladder, c: C64) {
    for &(j, p, cx) in &x.entries {
        let f = c * cx;
        let row = &rho[j * d..(j + 1) * d];
        let base = p * d;
        for &(l, q, cy) in &y.entries {
            out[base + q] += f * cy.conj() * row[l];
        }
    }
}

/// Result of a cascaded integration.
#[derive(Debug, Clone)]
pub struct Evolution {
    /// Joint state of qubit and cavities at the end of the last window.
    pub state: DensityMatrix,
    pub dt: f64,
    pub steps: usize,
    pub max_trace_drift: f64,
    /// Population of the highest Fock level of each cavity.
    pub top_level_population: Vec<f64>,
    /// Set when any top-level population exceeds [`CUTOFF_WARNING_LEVEL`].
    pub cutoff_warning: bool,
    /// Smallest eigenvalue of the integrated joint state before clamping.
    pub min_eigenvalue: f64,
}

impl Evolution {
    /// Reduced state of the cavities (qubit traced out).
    pub fn modes(&self) -> Result<DensityMatrix> {
        let keep: Vec<usize> = (1..self.state.space().factors()).collect();
        partial_trace(&self.state, &keep)
    }
}

/// Integrates the cascaded equation for one or two filters, starting from
/// the qubit steady state with all cavities in vacuum at the earliest window
/// start and stopping when the last window closes.
pub fn evolve_filters(params: &SystemParams, filters: &[&TemporalFilter], cfg: &SimConfig) -> Result<Evolution> {
    params.validate()?;
    cfg.validate()?;
    if filters.is_empty() || filters.len() > 2 {
        return Err(Error::InvalidParameter(format!("expected 1 or 2 filters, got {}", filters.len())));
    }
    let k = filters.len();
    let cutoffs = vec![cfg.fock_cutoff; k];
    let gen = CascadedGenerator::new(params, &cutoffs)?;
    let d = gen.dim();
    let dt = cfg.dt.unwrap_or_else(|| default_dt(params, filters));

    let windows: Vec<(f64, f64)> = filters.iter().map(|f| f.window()).collect();
    let begin = windows.iter().map(|w| w.0).fold(f64::INFINITY, f64::min);
    let end = windows.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
    let mut breaks: Vec<f64> = windows.iter().flat_map(|&(a, b)| [a, b]).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-9));

    let qubit = qubit_steady_state(params)?;
    let mut rho = vec![C64::zero(); d * d];
    let stride = gen.space().stride(0);
    for a in 0..2 {
        for b in 0..2 {
            rho[a * stride * d + b * stride] = qubit.matrix()[(a, b)];
        }
    }

    let mut tracks: Vec<CouplingTrack> = filters.iter().map(|f| CouplingTrack::new(f)).collect();
    let mut k1 = vec![C64::zero(); d * d];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut g0 = vec![C64::zero(); k];
    let mut gm = g0.clone();
    let mut g1 = g0.clone();
    let mut steps = 0usize;
    let mut max_drift = 0.0f64;

    for seg in breaks.windows(2) {
        let (s0, s1) = (seg[0], seg[1]);
        if s1 <= s0 || s0 < begin || s1 > end {
            continue;
        }
        let n = libm::ceil((s1 - s0) / dt * (1.0 - 1e-12)).max(1.0) as usize;
        let h = (s1 - s0) / n as f64;
        let mid = 0.5 * (s0 + s1);
        let active: Vec<bool> = windows.iter().map(|&(a, b)| a <= mid && mid <= b).collect();
        let coupling = |tracks: &mut [CouplingTrack], t: f64, out: &mut [C64]| {
            for q in 0..k {
                out[q] = if active[q] {
                    let (a, b) = windows[q];
                    tracks[q].at(t.max(a + 0.5 * h).min(b))
                } else {
                    C64::zero()
                };
            }
        };
        for i in 0..n {
            let t = s0 + i as f64 * h;
            coupling(&mut tracks, t, &mut g0);
            coupling(&mut tracks, t + 0.5 * h, &mut gm);
            coupling(&mut tracks, t + h, &mut g1);

            gen.eval(&g0, &rho, &mut k1);
            axpy(&mut tmp, &rho, &k1, 0.5 * h);
            gen.eval(&gm, &tmp, &mut k2);
            axpy(&mut tmp, &rho, &k2, 0.5 * h);
            gen.eval(&gm, &tmp, &mut k3);
            axpy(&mut tmp, &rho, &k3, h);
            gen.eval(&g1, &tmp, &mut k4);
            let w = h / 6.0;
            for idx in 0..d * d {
                rho[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * w;
            }
            steps += 1;

            let tr: f64 = (0..d).map(|j| rho[j * d + j].re).sum();
            let drift = (tr - 1.0).abs();
            max_drift = max_drift.max(drift);
            if !(drift <= TRACE_DRIFT_LIMIT) {
                return Err(Error::IntegrationFailure {
                    time: t + h,
                    reason: format!("trace drifted to {tr}"),
                });
            }
        }
    }

    let m = CMatrix::from_row_slice(d, d, &rho);
    let min_eigenvalue = eigh(&hermitize(&m)).0.min();
    let state = DensityMatrix::from_matrix_clamped(gen.space().clone(), m)?;
    let top: Vec<f64> = (0..k)
        .map(|q| {
            let stride = gen.space().stride(q + 1);
            let nc = cutoffs[q];
            (0..d).filter(|&j| (j / stride) % nc == nc - 1).map(|j| state.matrix()[(j, j)].re).sum()
        })
        .collect();
    let cutoff_warning = top.iter().any(|&p| p > CUTOFF_WARNING_LEVEL);
    if cutoff_warning {
        log::warn!("Fock cutoff {} may be inadequate: top-level populations {:?}", cfg.fock_cutoff, top);
    }
    Ok(Evolution { state, dt, steps, max_trace_drift: max_drift, top_level_population: top, cutoff_warning, min_eigenvalue })
}

fn axpy(out: &mut [C64], x: &[C64], y: &[C64], a: f64) {
    for ((o, &xv), &yv) in out.iter_mut().zip(x).zip(y) {
        *o = xv + yv * a;
    }
}

/// Joint qubit and two-cavity state on `[2, Nc, Nc]`.
pub fn evolve_cascaded(
    params: &SystemParams,
    f1: &TemporalFilter,
    f2: &TemporalFilter,
    cfg: &SimConfig,
) -> Result<Evolution> {
    evolve_filters(params, &[f1, f2], cfg)
}

/// Qubit and one cavity on `[2, Nc]`.
pub fn single_mode_capture(params: &SystemParams, f1: &TemporalFilter, cfg: &SimConfig) -> Result<Evolution> {
    evolve_filters(params, &[f1], cfg)
}

/// Outcome of rerunning a simulation at half the step.
#[derive(Debug, Clone)]
pub struct StepHalving {
    pub coarse: Evolution,
    pub fine: Evolution,
    /// Largest relative change among the monitored moments.
    pub max_rel_change: f64,
    pub converged: bool,
}

/// Runs at `dt` and `dt/2` and compares the mean occupations and the
/// first moments and cross moments of the cavities.
pub fn step_halving_check(params: &SystemParams, filters: &[&TemporalFilter], cfg: &SimConfig) -> Result<StepHalving> {
    let dt = cfg.dt.unwrap_or_else(|| default_dt(params, filters));
    let coarse = evolve_filters(params, filters, &SimConfig { dt: Some(dt), ..*cfg })?;
    let fine = evolve_filters(params, filters, &SimConfig { dt: Some(dt / 2.0), ..*cfg })?;
    let a = monitored(&coarse)?;
    let b = monitored(&fine)?;
    // moments well below the scale of the occupations are compared in
    // absolute terms against that scale
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-12);
    let max_rel_change = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).norm() / y.norm().max(1e-2 * scale))
        .fold(0.0, f64::max);
    Ok(StepHalving { converged: max_rel_change < cfg.rel_tol, coarse, fine, max_rel_change })
}

fn monitored(ev: &Evolution) -> Result<Vec<C64>> {
    let modes = ev.modes()?;
    let space = modes.space().clone();
    let mut ops = Vec::new();
    for k in 0..space.factors() {
        let a = embed(&annihilation(space.dims()[k])?, k, &space)?;
        ops.push(a.dagger().compose(&a)?);
        ops.push(a);
    }
    if space.factors() == 2 {
        let a1 = embed(&annihilation(space.dims()[0])?, 0, &space)?;
        let a2 = embed(&annihilation(space.dims()[1])?, 1, &space)?;
        ops.push(a1.compose(&a2)?);
        ops.push(a1.dagger().compose(&a2)?);
    }
    ops.iter().map(|o| modes.expect(o)).collect()
}
