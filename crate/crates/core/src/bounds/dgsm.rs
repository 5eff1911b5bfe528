use super::{ceil_count, check_target, BoundsError};
use crate::numeric::CompensatedSum;

/// Constants for the DGSM diagonal `c_ii = E[(∂_i f)²]` under
/// `||∇f||_∞ <= β` almost surely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgsmConstants {
    pub beta: f64,
    /// `max_i c_ii`.
    pub cmax: f64,
    /// `max_i c_ii (β² - c_ii)`.
    pub s1: f64,
    /// `cmax + β²`.
    pub s2: f64,
    /// `S1 / (cmax S2)`.
    pub s3: f64,
    /// `Σ_i c_ii (β² - c_ii) / S1`.
    pub d: f64,
}

pub fn dgsm_constants(c: &[f64], beta: f64) -> Result<DgsmConstants, BoundsError> {
    let hypothesis = |msg: String| Err(BoundsError::DgsmHypothesis(msg));
    if !(beta.is_finite() && beta > 0.0) {
        return hypothesis(format!("beta must be positive and finite, got {beta}"));
    }
    let b2 = beta * beta;
    if let Some((i, &v)) = c.iter().enumerate().find(|(_, &v)| !(0.0..=b2).contains(&v)) {
        return hypothesis(format!("c[{i}] = {v} is outside [0, beta^2 = {b2}]"));
    }
    let cmax = c.iter().copied().fold(0.0_f64, f64::max);
    if cmax <= 0.0 {
        return hypothesis("all DGSM entries are zero".into());
    }
    let mut total = CompensatedSum::new();
    let mut s1 = 0.0_f64;
    for &v in c {
        let term = v * (b2 - v);
        total.add(term);
        s1 = s1.max(term);
    }
    if s1 <= 0.0 {
        return hypothesis("every entry equals 0 or beta^2, so max c_ii (beta^2 - c_ii) = 0".into());
    }
    let s2 = cmax + b2;
    Ok(DgsmConstants {
        beta,
        cmax,
        s1,
        s2,
        s3: s1 / (cmax * s2),
        d: total.value() / s1,
    })
}

/// `8 d exp(-N t² / (2 (S1 + S2 t / 3)))`, unclamped.
pub fn dgsm_tail_bound_raw(c: &DgsmConstants, samples: u64, t: f64) -> f64 {
    8.0 * c.d * (-(samples as f64) * t * t / (2.0 * (c.s1 + c.s2 * t / 3.0))).exp()
}

/// Bound on `P(||D_C - D_Ĉ||₂ >= t)`.
pub fn dgsm_tail_bound(c: &DgsmConstants, samples: u64, t: f64) -> f64 {
    dgsm_tail_bound_raw(c, samples, t).min(1.0)
}

/// Samples for `||D_C - D_Ĉ||₂ <= ε cmax` with probability at least `1 - δ`.
pub fn plan_samples_dgsm(c: &DgsmConstants, eps: f64, delta: f64) -> Result<u64, BoundsError> {
    check_target(eps, delta)?;
    let required =
        c.s2 / (3.0 * eps * eps * c.cmax) * (2.0 * eps + 6.0 * c.s3) * (8.0 * c.d / delta).ln();
    Ok(ceil_count(required))
}

/// Relative accuracy after `N` samples, `sqrt((S2 / (3 N cmax)) (2 + 6 S3) ln(8d/δ))`.
pub fn epsilon_for_samples_dgsm(c: &DgsmConstants, samples: u64, delta: f64) -> Result<f64, BoundsError> {
    check_target(1.0, delta)?;
    Ok((c.s2 / (3.0 * samples as f64 * c.cmax) * (2.0 + 6.0 * c.s3) * (8.0 * c.d / delta).ln()).sqrt())
}
