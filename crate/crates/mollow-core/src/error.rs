// Copyright 2026 The mollow Authors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("factor index {index} out of range for a space with {factors} factors")]
    FactorOutOfRange { index: usize, factors: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steady state is not unique (null space dimension {0})")]
    AmbiguousSteadyState(usize),

    #[error("integration failed at t = {time:e} s: {reason}")]
    IntegrationFailure { time: f64, reason: String },

    #[error("moment exponent {exponent} exceeds the Fock cutoff {cutoff}")]
    ExponentTooLarge { exponent: u32, cutoff: usize },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient statistics: {shots} shots, at least {required} required")]
    InsufficientStatistics { shots: usize, required: usize },

    #[error("moment order {order} beyond supported maximum {max}")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("missing moment {0}")]
    MissingMoment(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("background fit did not converge (residual {residual:e})")]
    FitFailed { residual: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
