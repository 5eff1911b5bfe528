use std::f64::consts::E;

use super::{ceil_count, check_target, BoundsError};
use crate::numeric::CompensatedSum;
use crate::operators::{DenseSymmetric, SymmetricOperator};
use crate::probes::Sparsity;

/// Normwise constants for sparse Rademacher probes with parameter `s`
/// (`s = 1` is the standard Rademacher case).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormwiseConstants {
    pub s: f64,
    /// `||D_{A²} + (s-2) D_A²||₂`.
    pub k1: f64,
    /// `||s A - D_A||_∞`.
    pub k2: f64,
    /// `(||A||_F² + (s-2)||D_A||_F²) / K1`.
    pub d: f64,
    /// `K1 / ||D_A||₂²`.
    pub delta1: f64,
    /// `K2 / ||D_A||₂`.
    pub delta2: f64,
    /// `||D_A||₂ = max_i |a_ii|`.
    pub norm_da: f64,
}

impl NormwiseConstants {
    /// `Δ1 / Δ2`.
    pub fn delta3(&self) -> f64 {
        self.delta1 / self.delta2
    }

    /// Multiplies the matrix by `alpha > 0`: `K1` scales by `alpha²`, `K2` and
    /// `||D_A||` by `alpha`, the relative constants are unchanged.
    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            k1: self.k1 * alpha * alpha,
            k2: self.k2 * alpha,
            norm_da: self.norm_da * alpha,
            ..*self
        }
    }
}

/// Outcome of the normwise constant computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormwiseAnalysis {
    /// `K1 = 0`: the matrix is diagonal and standard Rademacher probes recover
    /// it exactly from a single sample.
    Diagonal,
    Bounded(NormwiseConstants),
}

impl NormwiseAnalysis {
    pub fn constants(&self) -> Option<&NormwiseConstants> {
        match self {
            NormwiseAnalysis::Diagonal => None,
            NormwiseAnalysis::Bounded(c) => Some(c),
        }
    }
}

/// Constants for sparsity `s` computed from the matrix entries.
///
/// Row `i` contributes `r_i = Σ_{j≠i} a_ij² + (s-1) a_ii²`, which equals
/// `(A²)_ii + (s-2) a_ii²` without the cancellation of the subtracted form.
/// Then `K1 = max r_i` and `d = Σ r_i / K1`.
pub fn normwise_constants(a: &DenseSymmetric, s: f64) -> Result<NormwiseAnalysis, BoundsError> {
    let s = Sparsity::new(s).map_err(|_| BoundsError::InvalidSparsity(s))?.get();
    let n = a.dim();
    let mut k1 = 0.0_f64;
    let mut k2 = 0.0_f64;
    let mut total = CompensatedSum::new();
    let mut norm_da = 0.0_f64;
    for i in 0..n {
        let aii = a.get(i, i);
        let mut off_sq = CompensatedSum::new();
        let mut off_abs = CompensatedSum::new();
        for j in (0..n).filter(|&j| j != i) {
            let aij = a.get(i, j);
            off_sq.add(aij * aij);
            off_abs.add(aij.abs());
        }
        let r = off_sq.value() + (s - 1.0) * aii * aii;
        k1 = k1.max(r);
        k2 = k2.max((s - 1.0) * aii.abs() + s * off_abs.value());
        total.add(r);
        norm_da = norm_da.max(aii.abs());
    }
    if norm_da == 0.0 {
        return Err(BoundsError::ZeroDiagonal);
    }
    if k1 == 0.0 {
        return Ok(NormwiseAnalysis::Diagonal);
    }
    Ok(NormwiseAnalysis::Bounded(NormwiseConstants {
        s,
        k1,
        k2,
        d: total.value() / k1,
        delta1: k1 / (norm_da * norm_da),
        delta2: k2 / norm_da,
        norm_da,
    }))
}

/// `8 d exp(-N t² / (2 (K1 + t K2 / 3)))`, unclamped.
pub fn normwise_tail_bound_raw(c: &NormwiseConstants, samples: u64, t: f64) -> f64 {
    let n = samples as f64;
    8.0 * c.d * (-n * t * t / (2.0 * (c.k1 + t * c.k2 / 3.0))).exp()
}

/// Probability bound for `||D_A - D_Â||₂ >= t`, clamped to `[0, 1]`.
pub fn normwise_tail_bound(analysis: &NormwiseAnalysis, samples: u64, t: f64) -> f64 {
    match analysis {
        NormwiseAnalysis::Diagonal => 0.0,
        NormwiseAnalysis::Bounded(c) => normwise_tail_bound_raw(c, samples, t).min(1.0),
    }
}

/// Smallest `N` with `N >= (Δ2 / (3ε²)) (2ε + 6 Δ1/Δ2) ln(8d/δ)`.
pub fn plan_samples_normwise(analysis: &NormwiseAnalysis, eps: f64, delta: f64) -> Result<u64, BoundsError> {
    check_target(eps, delta)?;
    Ok(match analysis {
        NormwiseAnalysis::Diagonal => 1,
        NormwiseAnalysis::Bounded(c) => {
            let required = c.delta2 / (3.0 * eps * eps) * (2.0 * eps + 6.0 * c.delta3()) * (8.0 * c.d / delta).ln();
            ceil_count(required)
        }
    })
}

/// `ε = sqrt((Δ2 / (3N)) (2 + 6 Δ3) ln(8d/δ))`: the relative accuracy
/// reached after `N` samples with the `2ε` term of the planner replaced by 2.
pub fn epsilon_for_samples_normwise(analysis: &NormwiseAnalysis, samples: u64, delta: f64) -> Result<f64, BoundsError> {
    check_target(1.0, delta)?;
    Ok(match analysis {
        NormwiseAnalysis::Diagonal => 0.0,
        NormwiseAnalysis::Bounded(c) => {
            (c.delta2 / (3.0 * samples as f64) * (2.0 + 6.0 * c.delta3()) * (8.0 * c.d / delta).ln()).sqrt()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowEdge {
    /// The required `N` is below `8 e ln n`.
    Lower,
    /// The required `N` exceeds `n`.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianNormwisePlan {
    Feasible {
        samples: u64,
    },
    /// The planned count falls outside `[8 e ln n, n]`, where the Gaussian
    /// normwise guarantee is valid. At `n = 100` the window itself is empty.
    Infeasible {
        samples: u64,
        lower: f64,
        upper: f64,
        violated: WindowEdge,
    },
}

impl GaussianNormwisePlan {
    pub fn samples(&self) -> u64 {
        match *self {
            GaussianNormwisePlan::Feasible { samples } | GaussianNormwisePlan::Infeasible { samples, .. } => samples,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, GaussianNormwisePlan::Feasible { .. })
    }
}

/// `[8 e ln n, n]`.
pub fn gaussian_window(n: usize) -> (f64, f64) {
    (8.0 * E * (n as f64).ln(), n as f64)
}

/// Gaussian normwise planner from the two norms it depends on:
/// `N >= 128 (e ln n)³ / (ε² δ) · (||A||_∞ / ||D_A||_∞)²`.
pub fn plan_gaussian_normwise_from_norms(
    n: usize,
    norm_inf: f64,
    diag_norm_inf: f64,
    eps: f64,
    delta: f64,
) -> Result<GaussianNormwisePlan, BoundsError> {
    check_target(eps, delta)?;
    if n < 3 {
        return Err(BoundsError::DimensionTooSmall(n));
    }
    if diag_norm_inf == 0.0 {
        return Err(BoundsError::ZeroDiagonal);
    }
    let log_term = E * (n as f64).ln();
    let ratio = norm_inf / diag_norm_inf;
    let samples = ceil_count(128.0 * log_term.powi(3) / (eps * eps * delta) * ratio * ratio);
    let (lower, upper) = gaussian_window(n);
    let count = samples as f64;
    Ok(if count < lower {
        GaussianNormwisePlan::Infeasible {
            samples,
            lower,
            upper,
            violated: WindowEdge::Lower,
        }
    } else if count > upper {
        GaussianNormwisePlan::Infeasible {
            samples,
            lower,
            upper,
            violated: WindowEdge::Upper,
        }
    } else {
        GaussianNormwisePlan::Feasible { samples }
    })
}

pub fn plan_samples_gaussian_normwise(a: &DenseSymmetric, eps: f64, delta: f64) -> Result<GaussianNormwisePlan, BoundsError> {
    let diag = a.diagonal().max_abs();
    plan_gaussian_normwise_from_norms(a.dim(), a.norm_inf(), diag, eps, delta)
}
