// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Joint two-mode state reconstruction from moments.
//!
//! Least squares minimizes `‖(B - A vec ρ) ⊘ ε‖₂` over states. Compressed
//! sensing minimizes `Σ|ρ_ij|` over states with `‖B - A vec ρ‖₂ ≤ ‖ε‖₂`.

mod admm;
mod sensing;

pub use admm::SolverOptions;
pub use sensing::{build_sensing_matrix, SensingMatrix};

use alloc::vec::Vec;

use crate::error::Result;
use crate::observables::{log_negativity, MomentVector};
use crate::quantum::{DensityMatrix, HilbertSpace};
use admm::{project_states, solve_cs, solve_ls};
use sensing::RealCoords;

/// Reconstruction cutoff per mode.
pub const DEFAULT_CUTOFF: usize = 5;

/// Constraint slack accepted as satisfied, relative to `1 + ‖B‖`.
pub const CONSTRAINT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    LeastSquares,
    CompressedSensing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    /// Absent when the problem is infeasible.
    pub rho: Option<DensityMatrix>,
    pub method: Method,
    pub objective: f64,
    /// Distance by which the data constraint is violated (zero for LS).
    pub constraint_residual: f64,
    pub status: SolveStatus,
    pub iterations: usize,
}

/// Sigmas with zero, negative or non-finite entries replaced by
/// `max(1e-12, 1e-3 · median positive sigma)`.
pub fn effective_sigmas(moments: &MomentVector) -> Vec<f64> {
    let mut pos: Vec<f64> = moments.sigmas().iter().cloned().filter(|s| *s > 0.0 && s.is_finite()).collect();
    pos.sort_by(|a, b| a.total_cmp(b));
    let median = if pos.is_empty() {
        0.0
    } else if pos.len() % 2 == 1 {
        pos[pos.len() / 2]
    } else {
        0.5 * (pos[pos.len() / 2 - 1] + pos[pos.len() / 2])
    };
    let floor = (1e-3 * median).max(1e-12);
    moments.sigmas().iter().map(|&s| if s > 0.0 && s.is_finite() { s } else { floor }).collect()
}

fn real_data(moments: &MomentVector) -> Vec<f64> {
    moments.values().iter().flat_map(|z| [z.re, z.im]).collect()
}

struct Setup {
    coords: RealCoords,
    a: nalgebra::DMatrix<f64>,
    b: Vec<f64>,
    space: HilbertSpace,
}

fn setup(moments: &MomentVector, sensing: &SensingMatrix) -> Result<Setup> {
    sensing.check_moments(moments)?;
    let coords = RealCoords::new(sensing.dim());
    let a = coords.real_sensing(sensing);
    let n = sensing.cutoff();
    Ok(Setup { coords, a, b: real_data(moments), space: HilbertSpace::new(&[n, n])? })
}

fn residual_norm(s: &Setup, x: &[f64]) -> f64 {
    let ax = &s.a * nalgebra::DVector::from_column_slice(x);
    libm::sqrt(ax.iter().zip(&s.b).map(|(p, q)| (p - q) * (p - q)).sum())
}

/// Lower bound on `min over states ‖Ãx - b‖` from the unit residual
/// direction `λ` at `x`: `λ_min(Mat(Ãᵀλ)) - λᵀb`.
fn misfit_lower_bound(s: &Setup, x: &[f64]) -> f64 {
    let r: Vec<f64> = (&s.a * nalgebra::DVector::from_column_slice(x)).iter().zip(&s.b).map(|(p, q)| p - q).collect();
    let rn = libm::sqrt(r.iter().map(|v| v * v).sum());
    if rn == 0.0 {
        return 0.0;
    }
    let lam = nalgebra::DVector::from_iterator(r.len(), r.iter().map(|v| v / rn));
    let g = s.a.transpose() * &lam;
    let (vals, _) = crate::quantum::eigh(&s.coords.to_matrix(g.as_slice()));
    let lb = vals[0] - lam.iter().zip(&s.b).map(|(l, b)| l * b).sum::<f64>();
    lb.max(0.0)
}

fn state(s: &Setup, x: &[f64]) -> Result<DensityMatrix> {
    // the solver output is already a projection; repeat it to remove drift
    let p = project_states(&s.coords, x);
    DensityMatrix::from_matrix_clamped(s.space.clone(), s.coords.to_matrix(&p))
}

fn weighted_ls(s: &Setup, sigmas: &[f64], opts: &SolverOptions) -> (Vec<f64>, usize, bool) {
    let mut w: Vec<f64> = sigmas.iter().flat_map(|s| [1.0 / (s * s); 2]).collect();
    let mut sorted = w.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let med = sorted[sorted.len() / 2];
    w.iter_mut().for_each(|v| *v /= med);
    let out = solve_ls(&s.coords, &s.a, &s.b, &w, opts);
    (out.x, out.iterations, out.converged)
}

/// Weighted least-squares reconstruction.
pub fn reconstruct_ls(moments: &MomentVector, sensing: &SensingMatrix, opts: &SolverOptions) -> Result<TomographyResult> {
    let s = setup(moments, sensing)?;
    let sigmas = effective_sigmas(moments);
    let (x, iterations, converged) = weighted_ls(&s, &sigmas, opts);
    let rho = state(&s, &x)?;
    let objective = ls_objective(moments, sensing, &rho)?;
    Ok(TomographyResult {
        rho: Some(rho),
        method: Method::LeastSquares,
        objective,
        constraint_residual: 0.0,
        status: if converged { SolveStatus::Converged } else { SolveStatus::MaxIter },
        iterations,
    })
}

/// `‖(B - A vec ρ) ⊘ ε‖₂` with effective sigmas.
pub fn ls_objective(moments: &MomentVector, sensing: &SensingMatrix, rho: &DensityMatrix) -> Result<f64> {
    sensing.check_moments(moments)?;
    let sig = effective_sigmas(moments);
    let pred = sensing.apply(rho.matrix())?;
    Ok(libm::sqrt(moments.values().iter().zip(&pred).zip(&sig).map(|((b, p), e)| (b - p).norm_sqr() / (e * e)).sum()))
}

/// `Σ |ρ_ij|`.
pub fn l1_norm(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm()).sum()
}

/// Compressed-sensing reconstruction.
pub fn reconstruct_cs(moments: &MomentVector, sensing: &SensingMatrix, opts: &SolverOptions) -> Result<TomographyResult> {
    let s = setup(moments, sensing)?;
    let sigmas = effective_sigmas(moments);
    let radius = libm::sqrt(sigmas.iter().map(|e| e * e).sum());
    let slack = CONSTRAINT_TOL * (1.0 + libm::sqrt(s.b.iter().map(|v| v * v).sum()));

    // smallest attainable data misfit over states, with a dual bound
    let unit = alloc::vec![1.0; sigmas.len()];
    let (closest, it0, _) = weighted_ls(&s, &unit, opts);
    let lower = misfit_lower_bound(&s, &closest);
    if lower > radius + slack {
        return Ok(TomographyResult {
            rho: None,
            method: Method::CompressedSensing,
            objective: f64::NAN,
            constraint_residual: lower - radius,
            status: SolveStatus::Infeasible,
            iterations: it0,
        });
    }

    let out = match solve_cs(&s.coords, &s.a, &s.b, radius, slack, 1.0, Some(&closest), opts) {
        Ok(out) => out,
        Err(excess) => {
            return Ok(TomographyResult {
                rho: None,
                method: Method::CompressedSensing,
                objective: f64::NAN,
                constraint_residual: excess,
                status: SolveStatus::Infeasible,
                iterations: it0,
            })
        }
    };
    let rho = state(&s, &out.x)?;
    let violation = (residual_norm(&s, &s.coords.from_matrix(rho.matrix())) - radius).max(0.0);
    let status = if out.converged && violation <= slack { SolveStatus::Converged } else { SolveStatus::MaxIter };
    Ok(TomographyResult {
        objective: l1_norm(&rho),
        rho: Some(rho),
        method: Method::CompressedSensing,
        constraint_residual: violation,
        status,
        iterations: it0 + out.iterations,
    })
}

pub fn reconstruct(
    moments: &MomentVector,
    sensing: &SensingMatrix,
    method: Method,
    opts: &SolverOptions,
) -> Result<TomographyResult> {
    match method {
        Method::LeastSquares => reconstruct_ls(moments, sensing, opts),
        Method::CompressedSensing => reconstruct_cs(moments, sensing, opts),
    }
}

/// One grid point of an entanglement map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnPoint {
    /// NaN when no state was reconstructed.
    pub log_negativity: f64,
    pub status: Option<SolveStatus>,
}

/// Reconstruction and logarithmic negativity at every grid point. Errors
/// at a point give NaN with no status.
pub fn en_map(grid: &[MomentVector], sensing: &SensingMatrix, method: Method, opts: &SolverOptions) -> Vec<EnPoint> {
    grid.iter().map(|m| en_point(m, sensing, method, opts)).collect()
}

pub fn en_point(moments: &MomentVector, sensing: &SensingMatrix, method: Method, opts: &SolverOptions) -> EnPoint {
    match reconstruct(moments, sensing, method, opts) {
        Ok(r) => EnPoint {
            log_negativity: r.rho.as_ref().and_then(|rho| log_negativity(rho).ok()).unwrap_or(f64::NAN),
            status: Some(r.status),
        },
        Err(_) => EnPoint { log_negativity: f64::NAN, status: None },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::{enumerate_moments, fidelity, MomentIndex};
    use crate::quantum::{random_state, C64};
    use rand::SeedableRng;

    fn exact(rho: &DensityMatrix, idx: &[MomentIndex], sigma: f64) -> MomentVector {
        let m = MomentVector::exact(rho, idx).unwrap();
        MomentVector::new(idx.to_vec(), m.values().to_vec(), alloc::vec![sigma; idx.len()]).unwrap()
    }

    #[test]
    fn effective_sigma_floor() {
        let idx = enumerate_moments(1, Some(1), false);
        let m = MomentVector::new(idx.clone(), alloc::vec![C64::from(0.0); 2], alloc::vec![0.0, 0.2]).unwrap();
        assert_eq!(effective_sigmas(&m), [2e-4, 0.2]);
        let z = MomentVector::new(idx, alloc::vec![C64::from(0.0); 2], alloc::vec![0.0; 2]).unwrap();
        assert_eq!(effective_sigmas(&z), [1e-12, 1e-12]);
    }

    #[test]
    fn vacuum_is_recovered() {
        let idx = enumerate_moments(2, Some(4), false);
        let vac = DensityMatrix::basis(HilbertSpace::new(&[5, 5]).unwrap(), 0).unwrap();
        let a = build_sensing_matrix(&idx, 5).unwrap();
        for method in [Method::LeastSquares, Method::CompressedSensing] {
            let r = reconstruct(&exact(&vac, &idx, 0.0), &a, method, &SolverOptions::default()).unwrap();
            assert_eq!(r.status, SolveStatus::Converged, "{method:?}");
            assert!(fidelity(r.rho.as_ref().unwrap(), &vac).unwrap() > 0.9999);
        }
    }

    #[test]
    fn pure_state_from_full_moment_set() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let idx = enumerate_moments(4, None, false);
        let a = build_sensing_matrix(&idx, 5).unwrap();
        let rho = random_state(HilbertSpace::new(&[5, 5]).unwrap(), 1, &mut rng).unwrap();
        let r = reconstruct_ls(&exact(&rho, &idx, 0.0), &a, &SolverOptions::default()).unwrap();
        assert!(fidelity(r.rho.as_ref().unwrap(), &rho).unwrap() > 0.999, "{:?}", r.status);
    }

    #[test]
    fn inconsistent_data_is_infeasible() {
        let idx = [MomentIndex::new(1, 1, 0, 0)];
        let a = build_sensing_matrix(&idx, 3).unwrap();
        // photon number -1 is unreachable
        let m = MomentVector::new(idx.to_vec(), alloc::vec![C64::from(-1.0)], alloc::vec![0.01]).unwrap();
        let r = reconstruct_cs(&m, &a, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.rho.is_none());
        let p = en_map(&[m], &a, Method::CompressedSensing, &SolverOptions::default());
        assert!(p[0].log_negativity.is_nan());
    }
}
