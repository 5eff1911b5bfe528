//! Bound constants, tail probabilities and `(ε, δ)` sample planners.
//!
//! Everything here is a pure function of explicit matrix entries (or of the
//! exact DGSM diagonal). Tail probabilities are clamped to `[0, 1]`; the
//! `*_raw` variants return the unclamped expression for plotting bound
//! curves. Planners return the smallest integer sample count satisfying the
//! corresponding inequality, never less than 1.

mod closed_form;
mod component;
mod dgsm;
mod normwise;

pub use closed_form::closed_form_constants;
pub use component::{
    component_constants, component_tail_bound, component_tail_bound_raw, plan_samples_component,
    ComponentConstants, ComponentMethod,
};
pub use dgsm::{
    dgsm_constants, dgsm_tail_bound, dgsm_tail_bound_raw, epsilon_for_samples_dgsm, plan_samples_dgsm,
    DgsmConstants,
};
pub use normwise::{
    epsilon_for_samples_normwise, gaussian_window, normwise_constants, normwise_tail_bound, normwise_tail_bound_raw,
    plan_gaussian_normwise_from_norms, plan_samples_gaussian_normwise, plan_samples_normwise, GaussianNormwisePlan,
    NormwiseAnalysis, NormwiseConstants, WindowEdge,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid sparsity parameter s = {0}: need s = 1 or s >= 2")]
    InvalidSparsity(f64),
    #[error("accuracy target must satisfy eps > 0 and 0 < delta < 1 (got eps = {eps}, delta = {delta})")]
    InvalidTarget { eps: f64, delta: f64 },
    #[error("the diagonal of the matrix is identically zero, so relative accuracy is undefined")]
    ZeroDiagonal,
    #[error("diagonal entry {0} is zero, so componentwise relative accuracy is undefined")]
    ZeroDiagonalEntry(usize),
    #[error("component index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension n = {0} is too small; the Gaussian normwise planner needs n >= 3")]
    DimensionTooSmall(usize),
    #[error("DGSM hypothesis violated: {0}")]
    DgsmHypothesis(String),
}

pub(crate) fn check_target(eps: f64, delta: f64) -> Result<(), BoundsError> {
    if eps > 0.0 && eps.is_finite() && delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::InvalidTarget { eps, delta })
    }
}

/// `max(1, ⌈x⌉)`, saturating at `u64::MAX`.
pub(crate) fn ceil_count(x: f64) -> u64 {
    if x.is_nan() || x <= 1.0 {
        1
    } else {
        x.ceil() as u64
    }
}
