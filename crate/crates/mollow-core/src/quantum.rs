// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra over explicit tensor-product spaces.
//!
//! Factor order is fixed by the caller and preserved everywhere; the
//! simulation always uses `(qubit, mode 1, mode 2)`. Flat indices follow the
//! Kronecker convention, so factor 0 is the most significant digit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Ordered list of tensor factors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimension("space needs at least one factor".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidDimension(format!("factor dimension {d}")));
        }
        Ok(Self { dims: dims.to_vec() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Flat-index stride of a factor.
    pub fn stride(&self, factor: usize) -> usize {
        self.dims[factor + 1..].iter().product()
    }

    fn check_factor(&self, index: usize) -> Result<()> {
        if index >= self.dims.len() {
            return Err(Error::FactorOutOfRange { index, factors: self.dims.len() });
        }
        Ok(())
    }
}

/// An operator on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        if matrix.nrows() != space.total() {
            return Err(Error::DimensionMismatch { expected: space.total(), found: matrix.nrows() });
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let n = space.total();
        Self { space, matrix: CMatrix::identity(n, n) }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space.clone(), matrix: self.matrix.adjoint() }
    }

    /// Operator product `self * rhs` on the same space.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        if self.space != rhs.space {
            return Err(Error::DimensionMismatch { expected: self.space.total(), found: rhs.space.total() });
        }
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &rhs.matrix })
    }
}

/// Bosonic annihilation operator truncated to `dim` levels.
pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("annihilation operator needs dim >= 2, got {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new(libm::sqrt(n as f64), 0.0);
    }
    Operator::new(HilbertSpace::new(&[dim])?, m)
}

/// Lift a single-factor operator into `space` at `factor_index`.
pub fn embed(op: &Operator, factor_index: usize, space: &HilbertSpace) -> Result<Operator> {
    space.check_factor(factor_index)?;
    let want = space.dims()[factor_index];
    if op.matrix.nrows() != want {
        return Err(Error::DimensionMismatch { expected: want, found: op.matrix.nrows() });
    }
    let mut acc = CMatrix::identity(1, 1);
    for (k, &d) in space.dims().iter().enumerate() {
        acc = if k == factor_index {
            acc.kronecker(&op.matrix)
        } else {
            acc.kronecker(&CMatrix::identity(d, d))
        };
    }
    Operator::new(space.clone(), acc)
}

/// Density matrix tagged with its tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        if matrix.nrows() != space.total() {
            return Err(Error::DimensionMismatch { expected: space.total(), found: matrix.nrows() });
        }
        let herm = hermiticity_error(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let (evals, _) = eigh(&matrix);
        let min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { space, matrix })
    }

    /// Projects a nearly-physical matrix onto the state space: negative
    /// eigenvalues are set to zero and the trace renormalized.
    pub fn from_matrix_clamped(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix)?;
        if matrix.nrows() != space.total() {
            return Err(Error::DimensionMismatch { expected: space.total(), found: matrix.nrows() });
        }
        let (evals, vecs) = eigh(&matrix);
        let min = evals.iter().cloned().fold(f64::INFINITY, f64::min);
        if min >= 0.0 {
            let h = hermitize(&matrix);
            let tr = h.trace().re;
            if tr <= 0.0 {
                return Err(Error::InvalidState(format!("non-positive trace {tr:e}")));
            }
            return Ok(Self { space, matrix: h.unscale(tr) });
        }
        if min < -POSITIVITY_TOL {
            log::warn!("clamping density matrix with eigenvalue {min:e}");
        }
        let clamped: Vec<f64> = evals.iter().map(|&l| l.max(0.0)).collect();
        let tr: f64 = clamped.iter().sum();
        if tr <= 0.0 {
            return Err(Error::InvalidState("no positive spectral weight".into()));
        }
        let weights: Vec<f64> = clamped.iter().map(|l| l / tr).collect();
        Ok(Self { space, matrix: reassemble(&weights, &vecs) })
    }

    pub(crate) fn new_unchecked(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    /// Pure state `|psi><psi|` (normalized internally).
    pub fn pure(space: HilbertSpace, psi: &[C64]) -> Result<Self> {
        if psi.len() != space.total() {
            return Err(Error::DimensionMismatch { expected: space.total(), found: psi.len() });
        }
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let v = DVector::from_iterator(psi.len(), psi.iter().map(|z| z / libm::sqrt(norm2)));
        let m = &v * v.adjoint();
        Ok(Self { space, matrix: m })
    }

    /// `|k><k|` for the flat basis index `k`.
    pub fn basis(space: HilbertSpace, k: usize) -> Result<Self> {
        let n = space.total();
        if k >= n {
            return Err(Error::DimensionMismatch { expected: n, found: k });
        }
        let mut m = CMatrix::zeros(n, n);
        m[(k, k)] = C64::new(1.0, 0.0);
        Ok(Self { space, matrix: m })
    }

    pub fn maximally_mixed(space: HilbertSpace) -> Self {
        let n = space.total();
        let m = CMatrix::identity(n, n).unscale(n as f64);
        Self { space, matrix: m }
    }

    /// Tensor product, factors concatenated in order.
    pub fn tensor(&self, other: &DensityMatrix) -> Self {
        let mut dims = self.space.dims.clone();
        dims.extend_from_slice(&other.space.dims);
        Self {
            space: HilbertSpace { dims },
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).0.iter().cloned().collect()
    }

    /// Expectation value `Tr(rho O)`.
    pub fn expect(&self, op: &Operator) -> Result<C64> {
        if op.space != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.total(), found: op.space.total() });
        }
        Ok(trace_product(&self.matrix, &op.matrix))
    }

    /// Keeps the lowest `levels[k]` Fock levels of every factor and
    /// renormalizes.
    pub fn truncate(&self, levels: &[usize]) -> Result<Self> {
        if levels.len() != self.space.factors() {
            return Err(Error::DimensionMismatch { expected: self.space.factors(), found: levels.len() });
        }
        for (&l, &d) in levels.iter().zip(self.space.dims()) {
            if l == 0 || l > d {
                return Err(Error::InvalidDimension(format!("cannot keep {l} of {d} levels")));
            }
        }
        let new_space = HilbertSpace::new(levels)?;
        let kept: Vec<usize> = (0..self.dim())
            .filter(|&idx| {
                let digits = digits_of(idx, self.space.dims());
                digits.iter().zip(levels).all(|(&x, &l)| x < l)
            })
            .collect();
        let n = kept.len();
        let mut m = CMatrix::zeros(n, n);
        for (a, &i) in kept.iter().enumerate() {
            for (b, &j) in kept.iter().enumerate() {
                m[(a, b)] = self.matrix[(i, j)];
            }
        }
        let tr = m.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState("truncation removed all weight".into()));
        }
        DensityMatrix::from_matrix_clamped(new_space, m.unscale(tr))
    }
}

/// Transposes the indices of one tensor factor.
pub fn partial_transpose(rho: &DensityMatrix, factor_index: usize) -> Result<CMatrix> {
    partial_transpose_matrix(rho.matrix(), rho.space(), factor_index)
}

pub fn partial_transpose_matrix(m: &CMatrix, space: &HilbertSpace, factor_index: usize) -> Result<CMatrix> {
    space.check_factor(factor_index)?;
    let n = space.total();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.nrows() });
    }
    let stride = space.stride(factor_index);
    let d = space.dims()[factor_index];
    let mut out = CMatrix::zeros(n, n);
    for c in 0..n {
        let dc = (c / stride) % d;
        for r in 0..n {
            let dr = (r / stride) % d;
            let r2 = r - dr * stride + dc * stride;
            let c2 = c - dc * stride + dr * stride;
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    check_square(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(m.clone().svd(false, false).singular_values.sum())
}

/// Traces out every factor not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidParameter("partial trace needs at least one kept factor".into()));
    }
    let space = rho.space();
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    for &k in &keep_sorted {
        space.check_factor(k)?;
    }
    let dims = space.dims();
    let kept_dims: Vec<usize> = keep_sorted.iter().map(|&k| dims[k]).collect();
    let out_space = HilbertSpace::new(&kept_dims)?;
    let n = space.total();
    let m_out = out_space.total();

    // Split every flat index into (kept index, traced index) once.
    let mut kept_idx = vec![0usize; n];
    let mut traced_idx = vec![0usize; n];
    for idx in 0..n {
        let digits = digits_of(idx, dims);
        let (mut ki, mut ti) = (0usize, 0usize);
        for (f, &dgt) in digits.iter().enumerate() {
            if keep_sorted.binary_search(&f).is_ok() {
                ki = ki * dims[f] + dgt;
            } else {
                ti = ti * dims[f] + dgt;
            }
        }
        kept_idx[idx] = ki;
        traced_idx[idx] = ti;
    }
    let mut out = CMatrix::zeros(m_out, m_out);
    let src = rho.matrix();
    for c in 0..n {
        for r in 0..n {
            if traced_idx[r] == traced_idx[c] {
                out[(kept_idx[r], kept_idx[c])] += src[(r, c)];
            }
        }
    }
    Ok(DensityMatrix::new_unchecked(out_space, out))
}

pub(crate) fn digits_of(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        digits[k] = idx % d;
        idx /= d;
    }
    digits
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}

/// Largest `|m_ij - conj(m_ji)|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let eig = hermitize(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vecs = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// `V diag(w) V^dagger`.
pub(crate) fn reassemble(weights: &[f64], vecs: &CMatrix) -> CMatrix {
    let n = vecs.nrows();
    let mut scaled = vecs.clone();
    for (k, &w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w);
    }
    let mut out = &scaled * vecs.adjoint();
    // exact Hermiticity
    for i in 0..n {
        out[(i, i)].im = 0.0;
        for j in i + 1..n {
            let avg = (out[(i, j)] + out[(j, i)].conj()).scale(0.5);
            out[(i, j)] = avg;
            out[(j, i)] = avg.conj();
        }
    }
    out
}

/// Square root of a positive semidefinite matrix; eigenvalues in
/// `[-POSITIVITY_TOL, 0)` are treated as zero.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(m);
    let roots: Vec<f64> = vals.iter().map(|&l| libm::sqrt(l.max(0.0))).collect();
    reassemble(&roots, &vecs)
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::zero();
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Random density matrix of the given rank from a complex Ginibre draw,
/// `ρ = G G† / Tr(G G†)` with `G` of size `d × rank`.
pub fn random_state<R: rand::Rng + ?Sized>(space: HilbertSpace, rank: usize, rng: &mut R) -> Result<DensityMatrix> {
    let d = space.total();
    if rank == 0 || rank > d {
        return Err(Error::InvalidDimension(format!("rank {rank} for dimension {d}")));
    }
    let g = CMatrix::from_fn(d, rank, |_, _| {
        let re: f64 = rng.sample(rand_distr::StandardNormal);
        let im: f64 = rng.sample(rand_distr::StandardNormal);
        C64::new(re, im)
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let mut m = m.unscale(tr);
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in i + 1..n {
            m[(j, i)] = m[(i, j)].conj();
        }
    }
    Ok(DensityMatrix { space, matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> DensityMatrix {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::pure(HilbertSpace::new(&[2, 2]).unwrap(), &[c(s), c(0.0), c(0.0), c(s)]).unwrap()
    }

    #[test]
    fn annihilation_small_dims() {
        let a2 = annihilation(2).unwrap();
        assert_eq!(a2.matrix()[(0, 1)], c(1.0));
        assert_eq!(a2.matrix()[(0, 0)], c(0.0));
        assert_eq!(a2.matrix()[(1, 0)], c(0.0));
        assert_eq!(a2.matrix()[(1, 1)], c(0.0));

        let a3 = annihilation(3).unwrap();
        assert_abs_diff_eq!(a3.matrix()[(1, 2)].re, 2f64.sqrt(), epsilon = 1e-15);

        assert!(matches!(annihilation(1), Err(Error::InvalidDimension(_))));
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn number_operator_is_diagonal_ladder() {
        let a = annihilation(4).unwrap();
        let n = a.dagger().compose(&a).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { i as f64 } else { 0.0 };
                assert_abs_diff_eq!(n.matrix()[(i, j)].re, want, epsilon = 1e-14);
                assert_abs_diff_eq!(n.matrix()[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn truncated_commutator() {
        let a = annihilation(5).unwrap();
        let ad = a.dagger();
        let comm = a.compose(&ad).unwrap().matrix() - ad.compose(&a).unwrap().matrix();
        for i in 0..4 {
            assert_abs_diff_eq!(comm[(i, i)].re, 1.0, epsilon = 1e-14);
        }
        // highest level carries -(dim-1)
        assert_abs_diff_eq!(comm[(4, 4)].re, -4.0, epsilon = 1e-14);
    }

    #[test]
    fn embed_places_factor() {
        let space = HilbertSpace::new(&[2, 2]).unwrap();
        let sigma = annihilation(2).unwrap();
        let e = embed(&sigma, 0, &space).unwrap();
        let want = sigma.matrix().kronecker(&CMatrix::identity(2, 2));
        assert_eq!(e.matrix(), &want);

        let id = Operator::identity(HilbertSpace::new(&[3]).unwrap());
        let s3 = HilbertSpace::new(&[2, 3, 4]).unwrap();
        assert_eq!(embed(&id, 1, &s3).unwrap().matrix(), &CMatrix::identity(24, 24));
    }

    #[test]
    fn embed_lowers_mode_of_product_basis_state() {
        // |g,1> -> |g,0> under I (x) a on [2,3]
        let space = HilbertSpace::new(&[2, 3]).unwrap();
        let a = embed(&annihilation(3).unwrap(), 1, &space).unwrap();
        let mut ket = DVector::<C64>::zeros(6);
        ket[1] = c(1.0); // g=0, n=1
        let out = a.matrix() * ket;
        let mut want = DVector::<C64>::zeros(6);
        want[0] = c(1.0);
        assert_eq!(out, want);
    }

    #[test]
    fn embed_errors() {
        let space = HilbertSpace::new(&[2, 3]).unwrap();
        let a = annihilation(3).unwrap();
        assert!(matches!(embed(&a, 2, &space), Err(Error::FactorOutOfRange { .. })));
        assert!(matches!(embed(&a, 0, &space), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&bell(), 0).unwrap();
        let (vals, _) = eigh(&pt);
        let want = [-0.5, 0.5, 0.5, 0.5];
        for (v, w) in vals.iter().zip(want) {
            assert_abs_diff_eq!(*v, w, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(trace_norm(&pt).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_of_product_and_diagonal() {
        let sa = HilbertSpace::new(&[2]).unwrap();
        let mut ma = CMatrix::zeros(2, 2);
        ma[(0, 0)] = c(0.7);
        ma[(1, 1)] = c(0.3);
        ma[(0, 1)] = C64::new(0.1, 0.2);
        ma[(1, 0)] = C64::new(0.1, -0.2);
        let ra = DensityMatrix::new(sa.clone(), ma.clone()).unwrap();
        let rb = DensityMatrix::pure(HilbertSpace::new(&[3]).unwrap(), &[c(1.0), C64::new(0.0, 1.0), c(0.5)]).unwrap();
        let prod = ra.tensor(&rb);
        let pt = partial_transpose(&prod, 0).unwrap();
        assert!((pt - ma.transpose().kronecker(rb.matrix())).norm() < 1e-14);

        let diag = DensityMatrix::maximally_mixed(HilbertSpace::new(&[2, 3]).unwrap());
        assert_eq!(&partial_transpose(&diag, 1).unwrap(), diag.matrix());
        assert!(partial_transpose(&diag, 2).is_err());
    }

    #[test]
    fn trace_norm_basics() {
        assert_abs_diff_eq!(trace_norm(&CMatrix::identity(5, 5)).unwrap(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trace_norm(bell().matrix()).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(trace_norm(&CMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn partial_trace_cases() {
        let marginal = partial_trace(&bell(), &[0]).unwrap();
        assert!((marginal.matrix() - CMatrix::identity(2, 2).scale(0.5)).norm() < 1e-14);
        assert!(partial_trace(&bell(), &[]).is_err());

        let ra = DensityMatrix::maximally_mixed(HilbertSpace::new(&[2]).unwrap());
        let rb = DensityMatrix::pure(HilbertSpace::new(&[3]).unwrap(), &[c(1.0), c(2.0), c(0.0)]).unwrap();
        let back = partial_trace(&ra.tensor(&rb), &[0]).unwrap();
        assert!((back.matrix() - ra.matrix()).norm() < 1e-14);
    }

    #[test]
    fn three_factor_partial_trace_is_sequential() {
        // random-ish state on [2,3,2] from a fixed vector
        let space = HilbertSpace::new(&[2, 3, 2]).unwrap();
        let psi: Vec<C64> = (0..12).map(|k| C64::new((k as f64 * 0.37).sin(), (k as f64 * 1.3).cos())).collect();
        let pure = DensityMatrix::pure(space.clone(), &psi).unwrap();
        let mixed = DensityMatrix::new(
            space.clone(),
            (pure.matrix().scale(0.6)) + DensityMatrix::maximally_mixed(space.clone()).matrix().scale(0.4),
        )
        .unwrap();
        let joint = partial_trace(&mixed, &[1]).unwrap();
        let step = partial_trace(&partial_trace(&mixed, &[0, 1]).unwrap(), &[1]).unwrap();
        assert!((joint.matrix() - step.matrix()).norm() < 1e-14);

        // direct summation oracle
        let mut oracle = CMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                for a in 0..2 {
                    for b in 0..2 {
                        oracle[(i, j)] += mixed.matrix()[(a * 6 + i * 2 + b, a * 6 + j * 2 + b)];
                    }
                }
            }
        }
        assert!((joint.matrix() - oracle).norm() < 1e-14);
    }

    #[test]
    fn validation_rejects_unphysical() {
        let s = HilbertSpace::new(&[2]).unwrap();
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = c(1.2);
        m[(1, 1)] = c(-0.2);
        assert!(DensityMatrix::new(s.clone(), m.clone()).is_err());
        let fixed = DensityMatrix::from_matrix_clamped(s.clone(), m).unwrap();
        assert_abs_diff_eq!(fixed.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);
        let mut nh = CMatrix::identity(2, 2).scale(0.5);
        nh[(0, 1)] = c(0.1);
        assert!(DensityMatrix::new(s, nh).is_err());
    }

    #[test]
    fn truncate_renormalizes() {
        let space = HilbertSpace::new(&[3, 3]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(space);
        let t = mixed.truncate(&[2, 2]).unwrap();
        assert!((t.matrix() - CMatrix::identity(4, 4).scale(0.25)).norm() < 1e-14);
    }
}
