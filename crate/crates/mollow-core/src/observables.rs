// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Moments, logarithmic negativity, cross-correlation, fidelity, purity.

use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::quantum::{eigh, partial_transpose, reassemble, trace_product, CMatrix, DensityMatrix, C64};

/// Exponents of `(a₁†)^m1 a₁^n1 (a₂†)^m2 a₂^n2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MomentIndex {
    pub m1: u32,
    pub n1: u32,
    pub m2: u32,
    pub n2: u32,
}

impl MomentIndex {
    pub const IDENTITY: MomentIndex = MomentIndex { m1: 0, n1: 0, m2: 0, n2: 0 };

    pub const fn new(m1: u32, n1: u32, m2: u32, n2: u32) -> Self {
        Self { m1, n1, m2, n2 }
    }

    pub fn order(&self) -> u32 {
        self.m1 + self.n1 + self.m2 + self.n2
    }

    /// Index of the Hermitian conjugate operator.
    pub fn conj(&self) -> Self {
        Self { m1: self.n1, n1: self.m1, m2: self.n2, n2: self.m2 }
    }

    pub fn is_canonical(&self) -> bool {
        *self <= self.conj()
    }

    pub fn canonical(&self) -> Self {
        (*self).min(self.conj())
    }

    pub fn max_exponent(&self) -> u32 {
        self.m1.max(self.n1).max(self.m2).max(self.n2)
    }

    pub fn as_array(&self) -> [u32; 4] {
        [self.m1, self.n1, self.m2, self.n2]
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.m1, self.n1, self.m2, self.n2)
    }
}

/// Moments with one standard deviation each.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    indices: Vec<MomentIndex>,
    values: Vec<C64>,
    sigmas: Vec<f64>,
}

impl MomentVector {
    pub fn new(indices: Vec<MomentIndex>, values: Vec<C64>, sigmas: Vec<f64>) -> Result<Self> {
        if values.len() != indices.len() {
            return Err(Error::DimensionMismatch { expected: indices.len(), found: values.len() });
        }
        if sigmas.len() != indices.len() {
            return Err(Error::DimensionMismatch { expected: indices.len(), found: sigmas.len() });
        }
        if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {s}")));
        }
        Ok(Self { indices, values, sigmas })
    }

    /// Exact moments of `rho` with zero sigmas.
    pub fn exact(rho: &DensityMatrix, indices: &[MomentIndex]) -> Result<Self> {
        let values = indices.iter().map(|idx| moment(rho, idx)).collect::<Result<Vec<_>>>()?;
        Ok(Self { indices: indices.to_vec(), values, sigmas: alloc::vec![0.0; indices.len()] })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MomentIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn iter(&self) -> impl Iterator<Item = (MomentIndex, C64, f64)> + '_ {
        self.indices.iter().zip(&self.values).zip(&self.sigmas).map(|((&i, &v), &s)| (i, v, s))
    }

    /// Value and sigma of `idx`, conjugating a stored conjugate index.
    pub fn get(&self, idx: &MomentIndex) -> Option<(C64, f64)> {
        if let Some(k) = self.indices.iter().position(|i| i == idx) {
            return Some((self.values[k], self.sigmas[k]));
        }
        let c = idx.conj();
        self.indices.iter().position(|i| *i == c).map(|k| (self.values[k].conj(), self.sigmas[k]))
    }

    pub fn value(&self, idx: &MomentIndex) -> Result<C64> {
        self.get(idx).map(|v| v.0).ok_or_else(|| Error::MissingMoment(format!("{idx}")))
    }

    /// Entries restricted to `indices`, in that order.
    pub fn select(&self, indices: &[MomentIndex]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len());
        let mut sigmas = Vec::with_capacity(indices.len());
        for idx in indices {
            let (v, s) = self.get(idx).ok_or_else(|| Error::MissingMoment(format!("{idx}")))?;
            values.push(v);
            sigmas.push(s);
        }
        Ok(Self { indices: indices.to_vec(), values, sigmas })
    }
}

/// Matrix of `(a†)^m a^n` on `dim` levels, as `(source, target, coefficient)`
/// triples (one per nonzero column).
pub(crate) fn ladder_power(dim: usize, m: u32, n: u32) -> Vec<(usize, usize, f64)> {
    let (m, n) = (m as usize, n as usize);
    let mut out = Vec::new();
    for k in n..dim {
        let mid = k - n;
        let target = mid + m;
        if target >= dim {
            continue;
        }
        // a^n |k> = sqrt(k!/(k-n)!) |k-n>, (a†)^m |j> = sqrt((j+m)!/j!) |j+m>
        let mut c = 1.0;
        for q in mid + 1..=k {
            c *= q as f64;
        }
        for q in mid + 1..=target {
            c *= q as f64;
        }
        out.push((k, target, libm::sqrt(c)));
    }
    out
}

fn check_two_mode(rho: &DensityMatrix) -> Result<(usize, usize)> {
    let dims = rho.space().dims();
    if dims.len() != 2 {
        return Err(Error::InvalidDimension(format!("expected a two-mode state, got {} factors", dims.len())));
    }
    Ok((dims[0], dims[1]))
}

/// Normally ordered moment `Tr[ρ (a₁†)^m1 a₁^n1 (a₂†)^m2 a₂^n2]` on the
/// truncated space.
pub fn moment(rho: &DensityMatrix, idx: &MomentIndex) -> Result<C64> {
    let (d1, d2) = check_two_mode(rho)?;
    for (e, d) in [(idx.m1, d1), (idx.n1, d1), (idx.m2, d2), (idx.n2, d2)] {
        if e as usize > d - 1 {
            return Err(Error::ExponentTooLarge { exponent: e, cutoff: d });
        }
    }
    let o1 = ladder_power(d1, idx.m1, idx.n1);
    let o2 = ladder_power(d2, idx.m2, idx.n2);
    let m = rho.matrix();
    let mut acc = C64::zero();
    // Tr(ρ O) = Σ_j ρ[j, p(j)] c_j over columns j of O
    for &(j1, p1, c1) in &o1 {
        for &(j2, p2, c2) in &o2 {
            acc += m[(j1 * d2 + j2, p1 * d2 + p2)] * (c1 * c2);
        }
    }
    Ok(acc)
}

/// Canonical indices with every exponent `<= max_exp` and, if bounded,
/// total order `<= max_order`, sorted by order and then lexicographically.
///
/// `(2, Some(4), false)` gives 27 indices and `(4, None, true)` gives 325.
pub fn enumerate_moments(max_exp: u32, max_order: Option<u32>, include_identity: bool) -> Vec<MomentIndex> {
    let mut out = Vec::new();
    for m1 in 0..=max_exp {
        for n1 in 0..=max_exp {
            for m2 in 0..=max_exp {
                for n2 in 0..=max_exp {
                    let idx = MomentIndex::new(m1, n1, m2, n2);
                    if !idx.is_canonical() {
                        continue;
                    }
                    if idx == MomentIndex::IDENTITY && !include_identity {
                        continue;
                    }
                    if max_order.is_some_and(|o| idx.order() > o) {
                        continue;
                    }
                    out.push(idx);
                }
            }
        }
    }
    out.sort_by(|a, b| match a.order().cmp(&b.order()) {
        Ordering::Equal => a.cmp(b),
        o => o,
    });
    out
}

/// `log₂ ‖ρ^{T_A}‖₁` with the transpose over mode 1.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    log_negativity_over(rho, 0)
}

/// Logarithmic negativity with the partial transpose over `factor`.
pub fn log_negativity_over(rho: &DensityMatrix, factor: usize) -> Result<f64> {
    check_two_mode(rho)?;
    let pt = partial_transpose(rho, factor)?;
    let (evals, _) = eigh(&pt);
    let norm: f64 = evals.iter().map(|l| l.abs()).sum();
    let en = libm::log2(norm);
    Ok(if en < 0.0 && en > -1e-9 { 0.0 } else { en })
}

/// Zero-delay cross-correlation `⟨a₁†a₂†a₁a₂⟩ / (⟨a₁†a₁⟩⟨a₂†a₂⟩)`.
pub fn g2_cross(rho: &DensityMatrix) -> Result<f64> {
    let num = moment(rho, &MomentIndex::new(1, 1, 1, 1))?.re;
    let n1 = moment(rho, &MomentIndex::new(1, 1, 0, 0))?.re;
    let n2 = moment(rho, &MomentIndex::new(0, 0, 1, 1))?.re;
    if !(n1 > 0.0 && n2 > 0.0) {
        return Err(Error::UndefinedCorrelation(format!("mean occupations {n1:e}, {n2:e}")));
    }
    Ok(num / (n1 * n2))
}

/// Uhlmann fidelity `(Tr √(√ρ ρ' √ρ))²`.
///
/// Eigenvalues below `SPECTRAL_FLOOR` times the largest one are treated as
/// zero in both square roots; otherwise rounding noise on rank-deficient
/// states enters as its square root.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.space() != sigma.space() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), found: sigma.dim() });
    }
    let s = floored_sqrt(rho.matrix());
    let inner: CMatrix = &s * sigma.matrix() * &s;
    let (evals, _) = eigh(&inner);
    let t: f64 = floored(evals.as_slice()).iter().map(|&l| libm::sqrt(l)).sum();
    Ok((t * t).clamp(0.0, 1.0))
}

const SPECTRAL_FLOOR: f64 = 1e-14;

fn floored(evals: &[f64]) -> Vec<f64> {
    let max = evals.iter().cloned().fold(0.0, f64::max);
    evals.iter().map(|&l| if l <= SPECTRAL_FLOOR * max { 0.0 } else { l }).collect()
}

fn floored_sqrt(m: &CMatrix) -> CMatrix {
    let (evals, vecs) = eigh(m);
    let roots: Vec<f64> = floored(evals.as_slice()).iter().map(|&l| libm::sqrt(l)).collect();
    reassemble(&roots, &vecs)
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    trace_product(rho.matrix(), rho.matrix()).re
}
