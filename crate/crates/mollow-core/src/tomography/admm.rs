// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Operator-splitting solver for the reconstruction problems.
//!
//! With `x` the real coordinates of `ρ`, the consensus form is
//!
//! ```text
//! minimize  h(y) + λ‖w‖₁ + I_C(z)   subject to  Ãx = y,  x = w,  x = z
//! ```
//!
//! where `C` is the set of unit-trace PSD matrices and `h` is either a
//! weighted least-squares term or the indicator of a ball around the data.
//! The `x` step solves one fixed normal system; the other blocks separate.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn};

use super::sensing::RealCoords;
use crate::quantum::{eigh, reassemble};

const RELAX: f64 = 1.0;
const ANDERSON_MEMORY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tolerance: 1e-7, max_iter: 50_000 }
    }
}

pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Row-compressed sparse matrix.
struct Csr {
    rows: usize,
    cols: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_dense(a: &DMatrix<f64>) -> Self {
        let (rows, cols) = a.shape();
        let mut ptr = vec![0];
        let (mut idx, mut val) = (Vec::new(), Vec::new());
        for r in 0..rows {
            for c in 0..cols {
                let v = a[(r, c)];
                if v != 0.0 {
                    idx.push(c);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        Self { rows, cols, ptr, idx, val }
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.rows {
            out[r] = (self.ptr[r]..self.ptr[r + 1]).map(|k| self.val[k] * x[self.idx[k]]).sum();
        }
    }

    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.rows {
            for k in self.ptr[r]..self.ptr[r + 1] {
                out[self.idx[k]] += self.val[k] * y[r];
            }
        }
    }
}

/// Euclidean projection onto `{λ ≥ 0, Σλ = 1}`.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in s.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Projection onto unit-trace PSD matrices in real coordinates.
pub(crate) fn project_states(coords: &RealCoords, p: &[f64]) -> Vec<f64> {
    let m = coords.to_matrix(p);
    let (vals, vecs) = eigh(&m);
    let w = project_simplex(vals.as_slice());
    coords.from_matrix(&reassemble(&w, &vecs))
}

fn sq(v: f64) -> f64 {
    v * v
}

/// Largest singular value of `diag(√w) A` by power iteration.
fn weighted_spectral_norm(a: &Csr, weights: &[f64], n: usize) -> f64 {
    let mut v = vec![1.0 / libm::sqrt(n as f64); n];
    let mut av = vec![0.0; weights.len()];
    let mut lam = 0.0;
    for _ in 0..50 {
        a.mul(&v, &mut av);
        av.iter_mut().zip(weights).for_each(|(x, w)| *x *= w);
        a.mul_t(&av, &mut v);
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        if (nv - lam).abs() <= 1e-6 * nv {
            lam = nv;
            break;
        }
        lam = nv;
    }
    libm::sqrt(lam)
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Exact projection onto `{x : ‖Ãx - b‖₂ ≤ radius}` through the thin SVD
/// of `Ã`.
struct DataBall {
    /// Right singular vectors as rows, `r × n`.
    vt: DMatrix<f64>,
    sigma: Vec<f64>,
    /// `Uᵀb` on the kept singular directions.
    beta: Vec<f64>,
    /// Squared radius left after the part of `b` outside the range.
    slack2: f64,
    outside: f64,
    radius: f64,
}

impl DataBall {
    fn new(a: &DMatrix<f64>, b: &[f64], radius: f64) -> Self {
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("left singular vectors requested");
        let vt_all = svd.v_t.expect("right singular vectors requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > 1e-12 * smax).collect();
        let bv = DVector::from_column_slice(b);
        let mut vt = DMatrix::zeros(keep.len(), a.ncols());
        let mut sigma = Vec::with_capacity(keep.len());
        let mut beta = Vec::with_capacity(keep.len());
        for (r, &k) in keep.iter().enumerate() {
            vt.set_row(r, &vt_all.row(k));
            sigma.push(svd.singular_values[k]);
            beta.push(u.column(k).dot(&bv));
        }
        let mut rest = bv.clone();
        for (r, &k) in keep.iter().enumerate() {
            rest.axpy(-beta[r], &u.column(k), 1.0);
        }
        let outside = rest.norm();
        Self { vt, sigma, beta, slack2: (radius * radius - outside * outside).max(0.0), outside, radius }
    }

    /// The ball meets the range of `Ã` up to `tol`.
    fn feasible(&self, tol: f64) -> bool {
        self.outside <= self.radius + tol
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        let cv = &self.vt * DVector::from_column_slice(v);
        let r2 = self.slack2.max(0.0);
        let resid = |mu: f64| -> f64 {
            (0..self.sigma.len())
                .map(|i| {
                    let s = self.sigma[i];
                    sq((s * cv[i] - self.beta[i]) / (1.0 + mu * s * s))
                })
                .sum()
        };
        let c: Vec<f64> = if resid(0.0) <= r2 {
            cv.iter().cloned().collect()
        } else if r2 == 0.0 {
            (0..self.sigma.len()).map(|i| self.beta[i] / self.sigma[i]).collect()
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            while resid(hi) > r2 && hi < 1e300 {
                hi *= 4.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if resid(mid) > r2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-14 * hi {
                    break;
                }
            }
            (0..self.sigma.len())
                .map(|i| {
                    let s = self.sigma[i];
                    (cv[i] + hi * s * self.beta[i]) / (1.0 + hi * s * s)
                })
                .collect()
        };
        let delta = DVector::from_iterator(c.len(), c.iter().zip(cv.iter()).map(|(a, b)| a - b));
        let shift = self.vt.transpose() * delta;
        v.iter().zip(shift.iter()).map(|(v, d)| v + d).collect()
    }
}

/// `min λ Σ|X_ij|` over states with `‖Ãx - b‖₂ ≤ radius`, started from
/// `warm` when given. Fails with the excess distance when the ball misses the range of `Ã`
/// by more than `slack`.
pub(crate) fn solve_cs(
    coords: &RealCoords,
    a: &DMatrix<f64>,
    b: &[f64],
    radius: f64,
    slack: f64,
    lambda: f64,
    warm: Option<&[f64]>,
    opts: &SolverOptions,
) -> core::result::Result<Outcome, f64> {
    let n = coords.len();
    let ball = DataBall::new(a, b, radius);
    if !ball.feasible(slack) {
        return Err(ball.outside - radius);
    }
    let start = match warm {
        Some(x) => x.to_vec(),
        None => project_states(coords, &vec![0.0; n]),
    };
    // state g = (z, w, uz, uw)
    let len = 4 * n;
    let mut g = Vec::with_capacity(len);
    g.extend_from_slice(&start);
    g.extend_from_slice(&start);
    g.resize(len, 0.0);

    // the returned state differs from the ball point by the primal residual
    let tol = opts.tolerance / ball.sigma.iter().cloned().fold(1.0, f64::max);
    let mut alpha = 1.0;
    let mut accel = Anderson::new(ANDERSON_MEMORY);
    let mut last_plain: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (z, w, uz, uw) = (&g[..n], &g[n..2 * n], &g[2 * n..3 * n], &g[3 * n..]);
        let v: Vec<f64> = (0..n).map(|i| 0.5 * (z[i] - uz[i] + w[i] - uw[i])).collect();
        let x = ball.project(&v);

        let mut t = vec![0.0; len];
        let xz: Vec<f64> = (0..n).map(|i| RELAX * x[i] + (1.0 - RELAX) * z[i]).collect();
        let zin: Vec<f64> = (0..n).map(|i| xz[i] + uz[i]).collect();
        let z_new = project_states(coords, &zin);
        let xw: Vec<f64> = (0..n).map(|i| RELAX * x[i] + (1.0 - RELAX) * w[i]).collect();
        let mut w_new: Vec<f64> = (0..n).map(|i| xw[i] + uw[i]).collect();
        coords.prox_l1(&mut w_new, lambda / alpha);
        let mut prim = 0.0;
        let mut dual = 0.0;
        for i in 0..n {
            t[i] = z_new[i];
            t[n + i] = w_new[i];
            t[2 * n + i] = uz[i] + xz[i] - z_new[i];
            t[3 * n + i] = uw[i] + xw[i] - w_new[i];
            prim += sq(x[i] - z_new[i]) + sq(x[i] - w_new[i]);
            dual += sq(z_new[i] - z[i] + w_new[i] - w[i]);
        }
        let prim = libm::sqrt(prim);
        let dual = alpha * libm::sqrt(dual);
        let eps_p = tol * (1.0 + norm(&x).max(norm(&z_new)));
        let eps_d = tol * (1.0 + alpha * norm(&t[2 * n..3 * n]).max(norm(&t[3 * n..])));
        if prim <= eps_p && dual <= eps_d {
            g = t;
            converged = true;
            break;
        }

        if iterations - last_change >= 50 {
            let (rp, rd) = (prim / eps_p, dual / eps_d);
            let fac = if rp > 10.0 * rd {
                4.0
            } else if rd > 10.0 * rp {
                0.25
            } else {
                1.0
            };
            if fac != 1.0 {
                alpha *= fac;
                last_change = iterations;
                g = t;
                g[2 * n..].iter_mut().for_each(|v| *v /= fac);
                accel.reset();
                last_plain = None;
                continue;
            }
        }

        let f: Vec<f64> = t.iter().zip(&g).map(|(t, g)| t - g).collect();
        let f_norm = norm(&f);
        if let Some((plain, plain_norm)) = &last_plain {
            if f_norm > *plain_norm {
                g = plain.clone();
                accel.reset();
                last_plain = None;
                continue;
            }
        }
        last_plain = Some((t.clone(), f_norm));
        g = accel.next(&t, &f);
    }
    g.truncate(n);
    Ok(Outcome { x: g, iterations, converged })
}

/// `(α I + 2ÃᵀWÃ)⁻¹` for the least-squares step.
struct LsSolver {
    alpha: f64,
    chol: Cholesky<f64, Dyn>,
    woodbury: bool,
}

impl LsSolver {
    fn new(a: &DMatrix<f64>, weights: &[f64], alpha: f64) -> Self {
        let (m, n) = a.shape();
        let woodbury = m < n;
        let k = if woodbury {
            // α⁻¹ [I - Ãᵀ(α(2W)⁻¹ + ÃÃᵀ)⁻¹Ã]
            let mut g = a * a.transpose();
            for (k, w) in weights.iter().enumerate() {
                g[(k, k)] += alpha / (2.0 * w);
            }
            g
        } else {
            let mut wa = a.clone();
            for (k, w) in weights.iter().enumerate() {
                wa.row_mut(k).scale_mut(2.0 * w);
            }
            a.transpose() * wa + DMatrix::identity(n, n) * alpha
        };
        let chol = Cholesky::new(k).expect("least-squares system is positive definite");
        Self { alpha, chol, woodbury }
    }

    fn solve(&self, a: &Csr, rhs: &[f64]) -> Vec<f64> {
        if self.woodbury {
            let mut ar = vec![0.0; a.rows];
            a.mul(rhs, &mut ar);
            let inner = self.chol.solve(&DVector::from_vec(ar));
            let mut back = vec![0.0; a.cols];
            a.mul_t(inner.as_slice(), &mut back);
            rhs.iter().zip(&back).map(|(r, b)| (r - b) / self.alpha).collect()
        } else {
            self.chol.solve(&DVector::from_column_slice(rhs)).as_slice().to_vec()
        }
    }
}

/// Type-II Anderson acceleration of a fixed-point map with a residual
/// safeguard.
struct Anderson {
    memory: usize,
    g_prev: Option<(Vec<f64>, Vec<f64>)>,
    dg: Vec<Vec<f64>>,
    df: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Self { memory, g_prev: None, dg: Vec::new(), df: Vec::new() }
    }

    fn reset(&mut self) {
        self.g_prev = None;
        self.dg.clear();
        self.df.clear();
    }

    /// Next iterate from `t = T(g)` and `f = t - g`.
    fn next(&mut self, t: &[f64], f: &[f64]) -> Vec<f64> {
        if let Some((tp, fp)) = self.g_prev.take() {
            self.dg.push(t.iter().zip(&tp).map(|(a, b)| a - b).collect());
            self.df.push(f.iter().zip(&fp).map(|(a, b)| a - b).collect());
            if self.dg.len() > self.memory {
                self.dg.remove(0);
                self.df.remove(0);
            }
        }
        self.g_prev = Some((t.to_vec(), f.to_vec()));
        let k = self.df.len();
        if k == 0 {
            return t.to_vec();
        }
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            for j in 0..=i {
                let v: f64 = self.df[i].iter().zip(&self.df[j]).map(|(a, b)| a * b).sum();
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            rhs[i] = self.df[i].iter().zip(f).map(|(a, b)| a * b).sum();
        }
        let reg = 1e-10 * (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max) + 1e-300;
        for i in 0..k {
            gram[(i, i)] += reg;
        }
        let Some(chol) = Cholesky::new(gram) else {
            self.reset();
            return t.to_vec();
        };
        let gamma = chol.solve(&rhs);
        let mut out = t.to_vec();
        for (j, gj) in gamma.iter().enumerate() {
            for (o, d) in out.iter_mut().zip(&self.dg[j]) {
                *o -= gj * d;
            }
        }
        out
    }
}

/// `min Σ w_k ((Ãx)_k - b_k)²` over states, with the quadratic handled
/// exactly in the `x` step.
pub(crate) fn solve_ls(coords: &RealCoords, a_dense: &DMatrix<f64>, b: &[f64], weights: &[f64], opts: &SolverOptions) -> Outcome {
    let n = coords.len();
    let a = Csr::from_dense(a_dense);
    let mut atwb = vec![0.0; n];
    let wb: Vec<f64> = b.iter().zip(weights).map(|(b, w)| 2.0 * w * b).collect();
    a.mul_t(&wb, &mut atwb);

    let mut alpha = 1.0;
    let mut solver = LsSolver::new(a_dense, weights, alpha);
    // state g = (z, u)
    let mut g = project_states(coords, &vec![0.0; n]);
    g.extend(core::iter::repeat(0.0).take(n));
    let mut accel = Anderson::new(ANDERSON_MEMORY);
    let mut last_plain: Option<(Vec<f64>, f64)> = None;
    let mut rhs = vec![0.0; n];
    let tol = 0.1 * opts.tolerance / weighted_spectral_norm(&a, weights, n).max(1.0);
    let mut iterations = 0;
    let mut converged = false;
    let mut last_change = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (z, u) = g.split_at(n);
        for i in 0..n {
            rhs[i] = atwb[i] + alpha * (z[i] - u[i]);
        }
        let x = solver.solve(&a, &rhs);
        let xr: Vec<f64> = x.iter().zip(z).map(|(x, z)| RELAX * x + (1.0 - RELAX) * z).collect();
        let zin: Vec<f64> = xr.iter().zip(u).map(|(x, u)| x + u).collect();
        let z_new = project_states(coords, &zin);
        let mut t = z_new.clone();
        t.extend(u.iter().zip(&xr).zip(&z_new).map(|((u, x), z)| u + x - z));
        let f: Vec<f64> = t.iter().zip(&g).map(|(t, g)| t - g).collect();
        let f_norm = norm(&f);

        let prim = libm::sqrt(x.iter().zip(&z_new).map(|(x, z)| (x - z) * (x - z)).sum());
        let dual = alpha * libm::sqrt(z_new.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum());
        let eps_p = tol * (1.0 + norm(&x).max(norm(&z_new)));
        let eps_d = tol * (1.0 + alpha * norm(&t[n..]));
        if prim <= eps_p && dual <= eps_d {
            g = t;
            converged = true;
            break;
        }

        if iterations - last_change >= 50 {
            let (rp, rd) = (prim / eps_p, dual / eps_d);
            let fac = if rp > 10.0 * rd {
                4.0
            } else if rd > 10.0 * rp {
                0.25
            } else {
                1.0
            };
            if fac != 1.0 {
                alpha *= fac;
                solver = LsSolver::new(a_dense, weights, alpha);
                last_change = iterations;
                g = t;
                g[n..].iter_mut().for_each(|v| *v /= fac);
                accel.reset();
                last_plain = None;
                continue;
            }
        }

        // reject an accelerated point that increased the residual
        if let Some((plain, plain_norm)) = &last_plain {
            if f_norm > *plain_norm {
                g = plain.clone();
                accel.reset();
                last_plain = None;
                continue;
            }
        }
        last_plain = Some((t.clone(), f_norm));
        g = accel.next(&t, &f);
    }
    g.truncate(n);
    Outcome { x: g, iterations, converged }
}
