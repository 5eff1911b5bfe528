use statrs::distribution::{ContinuousCDF, StudentsT};

use super::HarnessError;

/// Empirical quantile with linear interpolation between order statistics
/// (position `q (n - 1)` in the sorted sample).
pub fn quantile_band(values: &[f64], q: f64) -> Result<f64, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(HarnessError::InvalidQuantile(q));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub pass: bool,
}

/// One-sample Kolmogorov–Smirnov test of `samples` against Student t with
/// `dof` degrees of freedom. The p-value uses the asymptotic Kolmogorov law
/// with the Stephens small-sample correction.
pub fn ks_student_t(samples: &[f64], dof: u64, alpha: f64) -> Result<KsOutcome, HarnessError> {
    if dof < 2 {
        return Err(HarnessError::DegreesOfFreedom(dof));
    }
    if samples.is_empty() {
        return Err(HarnessError::EmptySample);
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    let statistic = ks_statistic(samples, |x| dist.cdf(x));
    let n = samples.len() as f64;
    let p_value = kolmogorov_survival(statistic * (n.sqrt() + 0.12 + 0.11 / n.sqrt()));
    Ok(KsOutcome {
        statistic,
        p_value,
        alpha,
        pass: p_value >= alpha,
    })
}

/// `sup_x |F_n(x) - F(x)|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// `Q(x) = 2 Σ_{k>=1} (-1)^{k-1} exp(-2 k² x²)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
