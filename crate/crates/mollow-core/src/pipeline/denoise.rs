// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Recovery of target-mode moments from noisy interleaved records.
//!
//! With `S_k = a_k + h_k†` and `a`, `h` independent, every raw moment of
//! the records is a binomial mixture
//!
//! ```text
//! ⟨S₁*^m1 S₁^n1 S₂*^m2 S₂^n2⟩ = Σ Π C(t_i, s_i) ⟨a-moment s⟩ ⟨h-moment t - s⟩
//! ```
//!
//! over all `s ≤ t` componentwise. Drive-off records give the `h` moments
//! directly, and the relation is inverted in order of increasing total
//! order. Uncertainties are the standard deviation of the estimates over
//! [`SEGMENTS`] contiguous blocks of shots.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use super::synth::InterleavedDataset;
use crate::error::{Error, Result};
use crate::observables::{MomentIndex, MomentVector};
use crate::quantum::C64;

pub const SEGMENTS: usize = 20;
pub const MIN_SHOTS: usize = 10_000;
/// Highest total order of record moments that is accumulated.
pub const MAX_NOISE_ORDER: u32 = 8;

/// Every index `s` with `s ≤ t` componentwise for some requested `t`,
/// identity included, sorted by order and then lexicographically.
pub fn downward_closure(indices: &[MomentIndex]) -> Vec<MomentIndex> {
    let mut set = alloc::collections::BTreeSet::new();
    for t in indices {
        for m1 in 0..=t.m1 {
            for n1 in 0..=t.n1 {
                for m2 in 0..=t.m2 {
                    for n2 in 0..=t.n2 {
                        set.insert(MomentIndex::new(m1, n1, m2, n2));
                    }
                }
            }
        }
    }
    let mut out: Vec<MomentIndex> = set.into_iter().collect();
    out.sort_by_key(|i| (i.order(), *i));
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Streaming segment-wise sums of record moments over a closed index set.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    closure: Vec<MomentIndex>,
    max_exp: u32,
    n_total: usize,
    on: Vec<C64>,
    off: Vec<C64>,
    counts: Vec<usize>,
}

impl MomentAccumulator {
    /// Accumulator for `n_total` shot pairs covering the closure of
    /// `indices`.
    pub fn new(indices: &[MomentIndex], n_total: usize) -> Result<Self> {
        if let Some(bad) = indices.iter().find(|i| i.order() > MAX_NOISE_ORDER) {
            return Err(Error::UnsupportedOrder { order: bad.order(), max: MAX_NOISE_ORDER });
        }
        if n_total < MIN_SHOTS {
            return Err(Error::InsufficientStatistics { shots: n_total, required: MIN_SHOTS });
        }
        let closure = downward_closure(indices);
        let max_exp = closure.iter().map(|i| i.max_exponent()).max().unwrap_or(0);
        let len = closure.len();
        Ok(Self {
            closure,
            max_exp,
            n_total,
            on: vec![C64::zero(); SEGMENTS * len],
            off: vec![C64::zero(); SEGMENTS * len],
            counts: vec![0; SEGMENTS],
        })
    }

    pub fn closure(&self) -> &[MomentIndex] {
        &self.closure
    }

    pub fn shots(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Segment of shot `index`.
    pub fn segment_of(&self, index: usize) -> usize {
        (index * SEGMENTS / self.n_total).min(SEGMENTS - 1)
    }

    pub fn push(&mut self, index: usize, on: [C64; 2], off: [C64; 2]) {
        let seg = self.segment_of(index);
        let len = self.closure.len();
        let p = self.max_exp as usize + 1;
        let mut pow = [[C64::zero(); 9]; 8];
        for (k, s) in [on[0], on[1], off[0], off[1]].iter().enumerate() {
            // rows 2k: s^j, 2k+1: conj(s)^j
            pow[2 * k][0] = C64::from(1.0);
            pow[2 * k + 1][0] = C64::from(1.0);
            for j in 1..p {
                pow[2 * k][j] = pow[2 * k][j - 1] * s;
                pow[2 * k + 1][j] = pow[2 * k + 1][j - 1] * s.conj();
            }
        }
        let base = seg * len;
        for (q, idx) in self.closure.iter().enumerate() {
            let (m1, n1, m2, n2) = (idx.m1 as usize, idx.n1 as usize, idx.m2 as usize, idx.n2 as usize);
            self.on[base + q] += pow[1][m1] * pow[0][n1] * pow[3][m2] * pow[2][n2];
            self.off[base + q] += pow[5][m1] * pow[4][n1] * pow[7][m2] * pow[6][n2];
        }
        self.counts[seg] += 1;
    }

    /// Adds the sums of another accumulator over the same index set.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.closure != self.closure || other.n_total != self.n_total {
            return Err(Error::InvalidParameter("accumulators cover different shots or indices".into()));
        }
        for (a, b) in self.on.iter_mut().zip(&other.on) {
            *a += b;
        }
        for (a, b) in self.off.iter_mut().zip(&other.off) {
            *a += b;
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Mean record moments over all shots and per segment.
    pub fn raw(&self) -> Result<RawMoments> {
        let total = self.shots();
        if total < MIN_SHOTS {
            return Err(Error::InsufficientStatistics { shots: total, required: MIN_SHOTS });
        }
        if self.counts.iter().any(|&c| c == 0) {
            return Err(Error::InsufficientStatistics { shots: total, required: SEGMENTS });
        }
        let len = self.closure.len();
        let mut on_total = vec![C64::zero(); len];
        let mut off_total = vec![C64::zero(); len];
        let mut on_seg = Vec::with_capacity(SEGMENTS);
        let mut off_seg = Vec::with_capacity(SEGMENTS);
        for s in 0..SEGMENTS {
            let c = self.counts[s] as f64;
            let on = &self.on[s * len..(s + 1) * len];
            let off = &self.off[s * len..(s + 1) * len];
            for q in 0..len {
                on_total[q] += on[q];
                off_total[q] += off[q];
            }
            on_seg.push(on.iter().map(|z| z / c).collect());
            off_seg.push(off.iter().map(|z| z / c).collect());
        }
        let n = total as f64;
        for q in 0..len {
            on_total[q] /= n;
            off_total[q] /= n;
        }
        Ok(RawMoments { closure: self.closure.clone(), on: on_total, off: off_total, on_seg, off_seg, shots: total })
    }
}

/// Mean record moments over a downward-closed index set.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMoments {
    pub closure: Vec<MomentIndex>,
    pub on: Vec<C64>,
    pub off: Vec<C64>,
    pub on_seg: Vec<Vec<C64>>,
    pub off_seg: Vec<Vec<C64>>,
    pub shots: usize,
}

impl RawMoments {
    /// Inverts the binomial mixture for the full data and every segment.
    pub fn unmix(&self) -> Denoised {
        let values = unmix(&self.closure, &self.on, &self.off);
        let segments = self.on_seg.iter().zip(&self.off_seg).map(|(on, off)| unmix(&self.closure, on, off)).collect();
        Denoised::new(self.closure.clone(), values, segments)
    }
}

fn unmix(closure: &[MomentIndex], on: &[C64], off: &[C64]) -> Vec<C64> {
    let pos: BTreeMap<MomentIndex, usize> = closure.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut a = vec![C64::zero(); closure.len()];
    for (q, t) in closure.iter().enumerate() {
        let mut acc = on[q];
        for m1 in 0..=t.m1 {
            for n1 in 0..=t.n1 {
                for m2 in 0..=t.m2 {
                    for n2 in 0..=t.n2 {
                        let s = MomentIndex::new(m1, n1, m2, n2);
                        if s == *t {
                            continue;
                        }
                        let rest = MomentIndex::new(t.m1 - m1, t.n1 - n1, t.m2 - m2, t.n2 - n2);
                        let c = binomial(t.m1, m1) * binomial(t.n1, n1) * binomial(t.m2, m2) * binomial(t.n2, n2);
                        acc -= a[pos[&s]] * off[pos[&rest]] * c;
                    }
                }
            }
        }
        a[q] = acc;
    }
    a
}

/// Denoised target moments over a closed index set, with per-segment
/// estimates kept for uncertainty propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised {
    indices: Vec<MomentIndex>,
    values: Vec<C64>,
    segments: Vec<Vec<C64>>,
    pos: BTreeMap<MomentIndex, usize>,
}

impl Denoised {
    pub fn new(indices: Vec<MomentIndex>, values: Vec<C64>, segments: Vec<Vec<C64>>) -> Self {
        let pos = indices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        Self { indices, values, segments, pos }
    }

    pub fn indices(&self) -> &[MomentIndex] {
        &self.indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn segments(&self) -> &[Vec<C64>] {
        &self.segments
    }

    pub fn get(&self, idx: &MomentIndex) -> Option<C64> {
        if let Some(&k) = self.pos.get(idx) {
            return Some(self.values[k]);
        }
        self.pos.get(&idx.conj()).map(|&k| self.values[k].conj())
    }

    fn segment_value(&self, seg: usize, idx: &MomentIndex) -> Option<C64> {
        if let Some(&k) = self.pos.get(idx) {
            return Some(self.segments[seg][k]);
        }
        self.pos.get(&idx.conj()).map(|&k| self.segments[seg][k].conj())
    }

    /// Standard deviation of the segment estimates of `idx`.
    pub fn sigma(&self, idx: &MomentIndex) -> Option<f64> {
        let k = self.segments.len();
        if k < 2 {
            return Some(0.0);
        }
        let vals: Vec<C64> = (0..k).map(|s| self.segment_value(s, idx)).collect::<Option<_>>()?;
        let mean = vals.iter().sum::<C64>() / k as f64;
        let var = vals.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (k - 1) as f64;
        Some(libm::sqrt(var))
    }

    /// Moment vector over `wanted` with segment-based sigmas.
    pub fn vector(&self, wanted: &[MomentIndex]) -> Result<MomentVector> {
        let mut values = Vec::with_capacity(wanted.len());
        let mut sigmas = Vec::with_capacity(wanted.len());
        for idx in wanted {
            let v = self.get(idx).ok_or_else(|| Error::MissingMoment(format!("{idx}")))?;
            values.push(v);
            sigmas.push(self.sigma(idx).unwrap_or(0.0));
        }
        MomentVector::new(wanted.to_vec(), values, sigmas)
    }

    /// Applies `f` to the full estimate and to every segment; `f` receives
    /// a lookup over the current values and returns the new value of each
    /// index.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(&MomentIndex, &dyn Fn(&MomentIndex) -> C64) -> C64,
    {
        let apply = |vals: &Vec<C64>| -> Vec<C64> {
            let look = |i: &MomentIndex| -> C64 {
                match self.pos.get(i) {
                    Some(&k) => vals[k],
                    None => vals[self.pos[&i.conj()]].conj(),
                }
            };
            self.indices.iter().map(|i| f(i, &look)).collect()
        };
        let values = apply(&self.values);
        let segments = self.segments.iter().map(apply).collect();
        Self::new(self.indices.clone(), values, segments)
    }
}

/// Denoised estimates of the closure of `indices` from a stored dataset.
pub fn denoise_estimate(ds: &InterleavedDataset, indices: &[MomentIndex]) -> Result<Denoised> {
    let mut acc = MomentAccumulator::new(indices, ds.len())?;
    ds.accumulate(&mut acc);
    Ok(acc.raw()?.unmix())
}

/// Target moments for arbitrary indices of total order up to
/// [`MAX_NOISE_ORDER`] by recursive unmixing.
pub fn denoise_general(ds: &InterleavedDataset, indices: &[MomentIndex]) -> Result<MomentVector> {
    denoise_estimate(ds, indices)?.vector(indices)
}

/// Canonical moments of order one and two, in the order
/// `⟨a₁⟩, ⟨a₂⟩, ⟨a₁†a₁⟩, ⟨a₂†a₂⟩, ⟨a₁²⟩, ⟨a₂²⟩, ⟨a₁a₂⟩, ⟨a₂†a₁⟩`.
pub const FIRST_SECOND: [MomentIndex; 8] = [
    MomentIndex::new(0, 1, 0, 0),
    MomentIndex::new(0, 0, 0, 1),
    MomentIndex::new(1, 1, 0, 0),
    MomentIndex::new(0, 0, 1, 1),
    MomentIndex::new(0, 2, 0, 0),
    MomentIndex::new(0, 0, 0, 2),
    MomentIndex::new(0, 1, 0, 1),
    MomentIndex::new(0, 1, 1, 0),
];

#[derive(Default, Clone, Copy)]
struct LowOrder {
    s: [C64; 2],
    n: [f64; 2],
    sq: [C64; 2],
    prod: C64,
    cross: C64,
}

impl LowOrder {
    fn add(&mut self, x: &[C64; 2]) {
        for k in 0..2 {
            self.s[k] += x[k];
            self.n[k] += x[k].norm_sqr();
            self.sq[k] += x[k] * x[k];
        }
        self.prod += x[0] * x[1];
        self.cross += x[0] * x[1].conj();
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            s: [self.s[0] / c, self.s[1] / c],
            n: [self.n[0] / c, self.n[1] / c],
            sq: [self.sq[0] / c, self.sq[1] / c],
            prod: self.prod / c,
            cross: self.cross / c,
        }
    }
}

/// Closed forms with `h†` moments taken from the drive-off means.
fn first_second_closed(on: &LowOrder, off: &LowOrder) -> [C64; 8] {
    let a = [on.s[0] - off.s[0], on.s[1] - off.s[1]];
    let n = |k: usize| C64::from(on.n[k] - off.n[k]) - a[k].conj() * off.s[k] - a[k] * off.s[k].conj();
    let sq = |k: usize| on.sq[k] - a[k] * off.s[k] * 2.0 - off.sq[k];
    let prod = on.prod - a[0] * off.s[1] - a[1] * off.s[0] - off.prod;
    let cross = on.cross - a[0] * off.s[1].conj() - a[1].conj() * off.s[0] - off.cross;
    [a[0], a[1], n(0), n(1), sq(0), sq(1), prod, cross]
}

/// First- and second-order moments from the explicit low-order formulas.
pub fn denoise_first_second(ds: &InterleavedDataset) -> Result<MomentVector> {
    let n = ds.len();
    if n < MIN_SHOTS {
        return Err(Error::InsufficientStatistics { shots: n, required: MIN_SHOTS });
    }
    let mut on_seg = [LowOrder::default(); SEGMENTS];
    let mut off_seg = [LowOrder::default(); SEGMENTS];
    let mut counts = [0usize; SEGMENTS];
    for (i, (on, off)) in ds.on_shots().iter().zip(ds.off_shots()).enumerate() {
        let s = (i * SEGMENTS / n).min(SEGMENTS - 1);
        on_seg[s].add(on);
        off_seg[s].add(off);
        counts[s] += 1;
    }
    let mut on_all = LowOrder::default();
    let mut off_all = LowOrder::default();
    let mut per_segment = Vec::with_capacity(SEGMENTS);
    for s in 0..SEGMENTS {
        let c = counts[s] as f64;
        per_segment.push(first_second_closed(&on_seg[s].scaled(c), &off_seg[s].scaled(c)));
        for (dst, src) in [(&mut on_all, &on_seg[s]), (&mut off_all, &off_seg[s])] {
            for k in 0..2 {
                dst.s[k] += src.s[k];
                dst.n[k] += src.n[k];
                dst.sq[k] += src.sq[k];
            }
            dst.prod += src.prod;
            dst.cross += src.cross;
        }
    }
    let values = first_second_closed(&on_all.scaled(n as f64), &off_all.scaled(n as f64));
    let sigmas = (0..8)
        .map(|q| {
            let mean = per_segment.iter().map(|v| v[q]).sum::<C64>() / SEGMENTS as f64;
            let var = per_segment.iter().map(|v| (v[q] - mean).norm_sqr()).sum::<f64>() / (SEGMENTS - 1) as f64;
            libm::sqrt(var)
        })
        .collect();
    MomentVector::new(FIRST_SECOND.to_vec(), values.to_vec(), sigmas)
}
