// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Sensing matrices and the real parametrization of Hermitian matrices.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::observables::{ladder_power, MomentIndex, MomentVector};
use crate::quantum::{CMatrix, C64};

/// Linear map from `vec(ρ)` over the basis `|i⟩⟨j|` of an `N ⊗ N`
/// truncation to moment values.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    indices: Vec<MomentIndex>,
    cutoff: usize,
    /// `rows × D²` with column `i·D + j` for `|i⟩⟨j|`, `D = N²`.
    entries: DMatrix<f64>,
}

/// Sensing matrix for `indices` on `cutoff` levels per mode.
pub fn build_sensing_matrix(indices: &[MomentIndex], cutoff: usize) -> Result<SensingMatrix> {
    if cutoff < 2 {
        return Err(Error::InvalidDimension(alloc::format!("cutoff must be >= 2, got {cutoff}")));
    }
    let d = cutoff * cutoff;
    let mut entries = DMatrix::zeros(indices.len(), d * d);
    for (r, idx) in indices.iter().enumerate() {
        if idx.max_exponent() as usize >= cutoff {
            return Err(Error::ExponentTooLarge { exponent: idx.max_exponent(), cutoff });
        }
        let o1 = ladder_power(cutoff, idx.m1, idx.n1);
        let o2 = ladder_power(cutoff, idx.m2, idx.n2);
        for &(s1, t1, c1) in &o1 {
            for &(s2, t2, c2) in &o2 {
                // ⟨j|O|i⟩ with O|i⟩ = c|j⟩
                let (i, j) = (s1 * cutoff + s2, t1 * cutoff + t2);
                entries[(r, i * d + j)] = c1 * c2;
            }
        }
    }
    Ok(SensingMatrix { indices: indices.to_vec(), cutoff, entries })
}

impl SensingMatrix {
    pub fn indices(&self) -> &[MomentIndex] {
        &self.indices
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Dimension `D = N²` of the two-mode truncation.
    pub fn dim(&self) -> usize {
        self.cutoff * self.cutoff
    }

    pub fn rows(&self) -> usize {
        self.indices.len()
    }

    pub fn entry(&self, row: usize, i: usize, j: usize) -> f64 {
        self.entries[(row, i * self.dim() + j)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `A · vec(ρ)`.
    pub fn apply(&self, rho: &CMatrix) -> Result<Vec<C64>> {
        let d = self.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
        }
        Ok((0..self.rows())
            .map(|r| {
                let mut acc = C64::from(0.0);
                for i in 0..d {
                    for j in 0..d {
                        let a = self.entries[(r, i * d + j)];
                        if a != 0.0 {
                            acc += rho[(i, j)] * a;
                        }
                    }
                }
                acc
            })
            .collect())
    }

    /// Permutes rows; `order[k]` is the source row of new row `k`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut entries = DMatrix::zeros(order.len(), self.entries.ncols());
        for (k, &src) in order.iter().enumerate() {
            entries.set_row(k, &self.entries.row(src));
        }
        Self { indices: order.iter().map(|&k| self.indices[k]).collect(), cutoff: self.cutoff, entries }
    }

    /// Checks that `moments` lists the same indices in the same order.
    pub(crate) fn check_moments(&self, moments: &MomentVector) -> Result<()> {
        if moments.indices() != self.indices.as_slice() {
            return Err(Error::DimensionMismatch { expected: self.rows(), found: moments.len() });
        }
        Ok(())
    }
}

/// Isometric real coordinates of Hermitian `D × D` matrices: the diagonal,
/// then `√2 Re`, `√2 Im` of each upper entry in row-major order.
#[derive(Debug, Clone)]
pub(crate) struct RealCoords {
    pub d: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl RealCoords {
    pub fn new(d: usize) -> Self {
        let pairs = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
        Self { d, pairs }
    }

    pub fn len(&self) -> usize {
        self.d * self.d
    }

    pub fn to_matrix(&self, p: &[f64]) -> CMatrix {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let mut m = CMatrix::zeros(self.d, self.d);
        for i in 0..self.d {
            m[(i, i)] = C64::from(p[i]);
        }
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let z = C64::new(p[self.d + 2 * k], p[self.d + 2 * k + 1]) * s;
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
        m
    }

    pub fn from_matrix(&self, m: &CMatrix) -> Vec<f64> {
        let s = core::f64::consts::SQRT_2;
        let mut p = vec![0.0; self.len()];
        for i in 0..self.d {
            p[i] = m[(i, i)].re;
        }
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            p[self.d + 2 * k] = s * z.re;
            p[self.d + 2 * k + 1] = s * z.im;
        }
        p
    }

    /// Real sensing rows: `Re` and `Im` of each complex row, interleaved.
    pub fn real_sensing(&self, a: &SensingMatrix) -> DMatrix<f64> {
        let d = self.d;
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let mut out = DMatrix::zeros(2 * a.rows(), self.len());
        for r in 0..a.rows() {
            for i in 0..d {
                out[(2 * r, i)] = a.entry(r, i, i);
            }
            for (k, &(i, j)) in self.pairs.iter().enumerate() {
                // A_ij X_ij + A_ji X_ji with X_ij = (P + iQ)/√2
                let (aij, aji) = (a.entry(r, i, j), a.entry(r, j, i));
                out[(2 * r, d + 2 * k)] = (aij + aji) * s;
                out[(2 * r + 1, d + 2 * k + 1)] = (aij - aji) * s;
            }
        }
        out
    }

    /// `Σ |X_ij|` over all entries.
    #[cfg(test)]
    pub fn l1(&self, p: &[f64]) -> f64 {
        let diag: f64 = p[..self.d].iter().map(|x| x.abs()).sum();
        let off: f64 = (0..self.pairs.len()).map(|k| libm::hypot(p[self.d + 2 * k], p[self.d + 2 * k + 1])).sum();
        diag + core::f64::consts::SQRT_2 * off
    }

    /// Proximal map of `λ Σ |X_ij|`.
    pub fn prox_l1(&self, p: &mut [f64], lambda: f64) {
        for x in p[..self.d].iter_mut() {
            *x = x.signum() * (x.abs() - lambda).max(0.0);
        }
        let t = lambda * core::f64::consts::SQRT_2;
        for k in 0..self.pairs.len() {
            let (a, b) = (p[self.d + 2 * k], p[self.d + 2 * k + 1]);
            let r = libm::hypot(a, b);
            let f = if r > t { 1.0 - t / r } else { 0.0 };
            p[self.d + 2 * k] = a * f;
            p[self.d + 2 * k + 1] = b * f;
        }
    }
}
