use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{ceil_count, check_target, BoundsError};
use crate::numeric::CompensatedSum;
use crate::operators::{DenseSymmetric, SymmetricOperator};

/// Per-row constants for the estimate of a single diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentConstants {
    pub index: usize,
    pub a_ii: f64,
    /// `||a_i||₂`, the Euclidean norm of row `i`.
    pub row_norm: f64,
    /// `Σ_{j≠i} a_ij²`.
    pub off_sq: f64,
    /// `|a_ii| + ||a_i||`.
    pub l1: f64,
    /// `a_ii² + ||a_i||²`.
    pub l2: f64,
    /// `1 + ||a_i|| / |a_ii|`.
    pub delta1: f64,
    /// `1 + (||a_i|| / |a_ii|)²`.
    pub delta2: f64,
    /// `|a_ii| / sqrt(off_sq)`; `None` when the row is diagonal.
    pub psi: Option<f64>,
}

impl ComponentConstants {
    pub fn is_diagonal_row(&self) -> bool {
        self.off_sq == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentMethod {
    Rademacher,
    Gaussian,
    NormalizedGaussian,
}

impl ComponentMethod {
    pub const ALL: [ComponentMethod; 3] = [
        ComponentMethod::Rademacher,
        ComponentMethod::Gaussian,
        ComponentMethod::NormalizedGaussian,
    ];
}

impl fmt::Display for ComponentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentMethod::Rademacher => "rademacher",
            ComponentMethod::Gaussian => "gaussian",
            ComponentMethod::NormalizedGaussian => "normalized-gaussian",
        })
    }
}

impl FromStr for ComponentMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rademacher" => Ok(ComponentMethod::Rademacher),
            "gaussian" => Ok(ComponentMethod::Gaussian),
            "normalized-gaussian" => Ok(ComponentMethod::NormalizedGaussian),
            other => Err(format!(
                "unknown component method `{other}` (expected rademacher, gaussian or normalized-gaussian)"
            )),
        }
    }
}

pub fn component_constants(a: &DenseSymmetric, index: usize) -> Result<ComponentConstants, BoundsError> {
    let n = a.dim();
    if index >= n {
        return Err(BoundsError::IndexOutOfRange { index, n });
    }
    let a_ii = a.get(index, index);
    let off_sq = (0..n)
        .filter(|&j| j != index)
        .map(|j| a.get(index, j).powi(2))
        .collect::<CompensatedSum>()
        .value();
    let row_norm = (a_ii * a_ii + off_sq).sqrt();
    let ratio = row_norm / a_ii.abs();
    Ok(ComponentConstants {
        index,
        a_ii,
        row_norm,
        off_sq,
        l1: a_ii.abs() + row_norm,
        l2: a_ii * a_ii + row_norm * row_norm,
        delta1: 1.0 + ratio,
        delta2: 1.0 + ratio * ratio,
        psi: (off_sq > 0.0).then(|| a_ii.abs() / off_sq.sqrt()),
    })
}

/// Unclamped bound on `P(|â_ii - a_ii| >= t)`.
pub fn component_tail_bound_raw(c: &ComponentConstants, method: ComponentMethod, samples: u64, t: f64) -> f64 {
    let n = samples as f64;
    match method {
        ComponentMethod::Rademacher => {
            if c.is_diagonal_row() {
                0.0
            } else {
                2.0 * (-n * t * t / (2.0 * c.off_sq)).exp()
            }
        }
        ComponentMethod::Gaussian => 2.0 * (-n * t * t / (2.0 * (c.l2 + t * c.l1))).exp(),
        ComponentMethod::NormalizedGaussian => {
            if c.is_diagonal_row() {
                0.0
            } else {
                (2.0 * c.off_sq / (PI * n)).sqrt() / t * (1.0 + t * t / c.off_sq).powf(-(n - 1.0) / 2.0)
            }
        }
    }
}

pub fn component_tail_bound(c: &ComponentConstants, method: ComponentMethod, samples: u64, t: f64) -> f64 {
    component_tail_bound_raw(c, method, samples, t).min(1.0)
}

/// Samples for `|â_ii - a_ii| <= ε |a_ii|` with probability at least `1 - δ`.
pub fn plan_samples_component(
    c: &ComponentConstants,
    method: ComponentMethod,
    eps: f64,
    delta: f64,
) -> Result<u64, BoundsError> {
    check_target(eps, delta)?;
    if c.a_ii == 0.0 {
        return Err(BoundsError::ZeroDiagonalEntry(c.index));
    }
    let log_term = 2.0 * (2.0 / delta).ln() / (eps * eps);
    let required = match method {
        ComponentMethod::Rademacher => c.off_sq / (c.a_ii * c.a_ii) * log_term,
        ComponentMethod::Gaussian => (c.delta2 + c.delta1 * eps) * log_term,
        ComponentMethod::NormalizedGaussian => match c.psi {
            None => 1.0,
            Some(psi) => {
                let num = ((2.0 / PI).sqrt() / (delta * eps * psi)).ln();
                1.0 + 2.0 * num / (eps * eps * psi * psi).ln_1p()
            }
        },
    };
    Ok(ceil_count(required))
}
