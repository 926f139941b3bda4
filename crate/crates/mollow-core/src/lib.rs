// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical core for entanglement between temporally filtered modes of a
//! continuously driven two-level emitter.
//!
//! The crate is `no_std` (with `alloc`). It covers:
//!
//! - [`quantum`]: dense operators and density matrices on tensor-product spaces,
//! - [`filter`]: temporal mode filters and their virtual-cavity couplings,
//! - [`dynamics`]: the qubit master equation and the cascaded two-filter
//!   master equation,
//! - [`observables`]: moments, logarithmic negativity, cross-correlation,
//!   fidelity and purity,
//! - [`pipeline`]: synthetic noisy heterodyne records, moment denoising and
//!   coherent-background removal,
//! - [`tomography`]: least-squares and compressed-sensing reconstruction of
//!   two-mode states from moment vectors.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dynamics;
pub mod error;
pub mod filter;
pub mod observables;
pub mod pipeline;
pub mod quad;
pub mod quantum;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use quantum::{CMatrix, DensityMatrix, HilbertSpace, Operator, C64};
