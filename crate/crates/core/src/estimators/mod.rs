//! Monte Carlo diagonal estimators.
//!
//! All estimators keep running sums rather than means: a
//! [`DiagonalEstimate`] holds `Σ (A w_k) ∘ w_k` and `Σ w_k ∘ w_k` with
//! compensated accumulation, and divides only when read. Two estimates built
//! from disjoint probe streams therefore merge exactly (up to reassociation).
//!
//! Probe `k` always comes from stream counter `start + k`, and work is cut
//! into fixed-size chunks merged in ascending order, so the parallel and
//! sequential paths are bitwise identical.

mod dgsm;

pub use dgsm::{estimate_dgsm, estimate_dgsm_with, GradientOracle, LinearModel, QuadraticModel};

use thiserror::Error;

use crate::numeric::CompensatedSum;
use crate::operators::{DiagonalVector, OperatorError, SymmetricOperator};
use crate::par::Execution;
use crate::probes::{ProbeDistribution, RngState};

/// Probes per work unit. Fixed so that results do not depend on thread count.
pub const CHUNK_SIZE: usize = 32;

/// Smallest accepted accumulated `Σ z_i²` in the normalized estimator.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot merge estimates with different modes or dimensions")]
    IncompatibleMerge,
    #[error("degenerate probe: accumulated squared probe entry {index} is {value:e}")]
    DegenerateProbe { index: usize, value: f64 },
    #[error("gradient sample has sup-norm {found} above the declared bound {bound}")]
    GradientBoundViolated { bound: f64, found: f64 },
    #[error("relative error undefined: exact diagonal is identically zero")]
    ZeroExactDiagonal,
    #[error("relative error undefined: exact entry {0} is zero")]
    ZeroExactComponent(usize),
    #[error("component index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorMode {
    /// `(1/N) Σ (A w_k) ∘ w_k`.
    Unnormalized,
    /// `(Σ (A z_k) ∘ z_k) ⊘ (Σ z_k ∘ z_k)`.
    Normalized,
}

/// Streaming accumulator for a diagonal estimate.
///
/// Normalized estimates from a single Gaussian probe have Cauchy-distributed
/// errors: their mean and variance do not exist and no clipping is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalEstimate {
    mode: EstimatorMode,
    samples: u64,
    numerator: Vec<CompensatedSum>,
    denominator: Vec<CompensatedSum>,
}

impl DiagonalEstimate {
    pub fn new(n: usize, mode: EstimatorMode) -> Self {
        Self {
            mode,
            samples: 0,
            numerator: vec![CompensatedSum::new(); n],
            denominator: vec![CompensatedSum::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.numerator.len()
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Adds one probe `w` and its image `A w`.
    pub fn update(&mut self, probe: &[f64], image: &[f64]) -> Result<(), EstimateError> {
        let n = self.dim();
        for len in [probe.len(), image.len()] {
            if len != n {
                return Err(EstimateError::DimensionMismatch { expected: n, found: len });
            }
        }
        for (((num, den), &w), &aw) in self.numerator.iter_mut().zip(&mut self.denominator).zip(probe).zip(image) {
            num.add(aw * w);
            den.add(w * w);
        }
        self.samples += 1;
        Ok(())
    }

    /// Folds in an estimate built from a disjoint probe stream.
    pub fn merge(&mut self, other: &DiagonalEstimate) -> Result<(), EstimateError> {
        if self.mode != other.mode || self.dim() != other.dim() {
            return Err(EstimateError::IncompatibleMerge);
        }
        for (a, b) in self.numerator.iter_mut().zip(&other.numerator) {
            a.merge(b);
        }
        for (a, b) in self.denominator.iter_mut().zip(&other.denominator) {
            a.merge(b);
        }
        self.samples += other.samples;
        Ok(())
    }

    pub fn numerator(&self) -> Vec<f64> {
        self.numerator.iter().map(CompensatedSum::value).collect()
    }

    pub fn denominator(&self) -> Vec<f64> {
        self.denominator.iter().map(CompensatedSum::value).collect()
    }

    /// The current estimate of `diag(A)`.
    pub fn value(&self) -> Result<DiagonalVector, EstimateError> {
        if self.samples == 0 {
            return Err(EstimateError::ZeroSamples);
        }
        match self.mode {
            EstimatorMode::Unnormalized => {
                let n = self.samples as f64;
                Ok(self.numerator.iter().map(|s| s.value() / n).collect::<Vec<_>>().into())
            }
            EstimatorMode::Normalized => self
                .numerator
                .iter()
                .zip(&self.denominator)
                .enumerate()
                .map(|(index, (num, den))| {
                    let d = den.value();
                    if d < DEGENERATE_DENOMINATOR {
                        Err(EstimateError::DegenerateProbe { index, value: d })
                    } else {
                        Ok(num.value() / d)
                    }
                })
                .collect::<Result<Vec<_>, _>>()
                .map(DiagonalVector::new),
        }
    }
}

/// Runs `samples` probes starting at `start`, accumulating each chunk with
/// `accumulate` and merging chunks in ascending counter order.
pub(crate) fn run_chunked<F>(
    n: usize,
    mode: EstimatorMode,
    samples: usize,
    start: RngState,
    exec: Execution,
    accumulate: F,
) -> Result<DiagonalEstimate, EstimateError>
where
    F: Fn(&mut DiagonalEstimate, RngState, usize) -> Result<(), EstimateError> + Sync + Send,
{
    if samples == 0 {
        return Err(EstimateError::ZeroSamples);
    }
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let partials: Vec<Result<DiagonalEstimate, EstimateError>> = exec.map_range(0..chunks, |c| {
        let first = c * CHUNK_SIZE;
        let len = CHUNK_SIZE.min(samples - first);
        let mut local = DiagonalEstimate::new(n, mode);
        accumulate(&mut local, RngState::at(start.seed, start.counter + first as u64), len)?;
        Ok(local)
    });
    let mut total = DiagonalEstimate::new(n, mode);
    for part in partials {
        total.merge(&part?)?;
    }
    Ok(total)
}

fn probe_loop<O: SymmetricOperator + ?Sized>(
    op: &O,
    dist: &ProbeDistribution,
    est: &mut DiagonalEstimate,
    first: RngState,
    len: usize,
) -> Result<(), EstimateError> {
    let n = op.dim();
    let mut probe = vec![0.0; n];
    let mut image = vec![0.0; n];
    let mut state = first;
    for _ in 0..len {
        dist.fill(&mut state.stream(), &mut probe);
        op.apply_checked(&probe, &mut image)?;
        est.update(&probe, &image)?;
        state = state.next();
    }
    Ok(())
}

/// Unnormalized estimate from probes `seed` streams `0..samples`.
pub fn estimate_diagonal<O: SymmetricOperator + ?Sized>(
    op: &O,
    dist: &ProbeDistribution,
    samples: usize,
    seed: u64,
) -> Result<DiagonalEstimate, EstimateError> {
    estimate_diagonal_with(op, dist, samples, RngState::new(seed), Execution::default())
}

/// Unnormalized estimate from probe streams `start.counter..start.counter + samples`.
pub fn estimate_diagonal_with<O: SymmetricOperator + ?Sized>(
    op: &O,
    dist: &ProbeDistribution,
    samples: usize,
    start: RngState,
    exec: Execution,
) -> Result<DiagonalEstimate, EstimateError> {
    run_chunked(op.dim(), EstimatorMode::Unnormalized, samples, start, exec, |est, first, len| {
        probe_loop(op, dist, est, first, len)
    })
}

/// Normalized estimate; probes are standard Gaussian.
pub fn estimate_diagonal_normalized<O: SymmetricOperator + ?Sized>(
    op: &O,
    samples: usize,
    seed: u64,
) -> Result<DiagonalEstimate, EstimateError> {
    estimate_diagonal_normalized_with(op, samples, RngState::new(seed), Execution::default())
}

pub fn estimate_diagonal_normalized_with<O: SymmetricOperator + ?Sized>(
    op: &O,
    samples: usize,
    start: RngState,
    exec: Execution,
) -> Result<DiagonalEstimate, EstimateError> {
    run_chunked(op.dim(), EstimatorMode::Normalized, samples, start, exec, |est, first, len| {
        probe_loop(op, &ProbeDistribution::Gaussian, est, first, len)
    })
}

/// Either estimator over a probe law, as named on the command line and in
/// experiment output: `rademacher`, `sparse:<s>`, `gaussian` or
/// `normalized-gaussian`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Unnormalized(ProbeDistribution),
    NormalizedGaussian,
}

impl Estimator {
    /// Sparsity parameter of a Rademacher-family probe law.
    pub fn sparsity(&self) -> Option<f64> {
        match self {
            Estimator::Unnormalized(d) => d.sparsity(),
            Estimator::NormalizedGaussian => None,
        }
    }

    pub fn run<O: SymmetricOperator + ?Sized>(
        &self,
        op: &O,
        samples: usize,
        start: RngState,
        exec: Execution,
    ) -> Result<DiagonalEstimate, EstimateError> {
        match self {
            Estimator::Unnormalized(d) => estimate_diagonal_with(op, d, samples, start, exec),
            Estimator::NormalizedGaussian => estimate_diagonal_normalized_with(op, samples, start, exec),
        }
    }
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Estimator::Unnormalized(d) => d.fmt(f),
            Estimator::NormalizedGaussian => f.write_str("normalized-gaussian"),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = crate::probes::ProbeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized-gaussian" => Ok(Estimator::NormalizedGaussian),
            _ => s.parse().map(Estimator::Unnormalized),
        }
    }
}

/// `max_i |exact_i - est_i| / max_i |exact_i|`.
pub fn normwise_relative_error(est: &DiagonalVector, exact: &DiagonalVector) -> Result<f64, EstimateError> {
    if est.len() != exact.len() {
        return Err(EstimateError::DimensionMismatch {
            expected: exact.len(),
            found: est.len(),
        });
    }
    let scale = exact.max_abs();
    if scale == 0.0 {
        return Err(EstimateError::ZeroExactDiagonal);
    }
    let err = exact
        .values()
        .iter()
        .zip(est.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(err / scale)
}

/// `|est_i - exact_i| / |exact_i|`.
pub fn componentwise_relative_error(
    est: &DiagonalVector,
    exact: &DiagonalVector,
    index: usize,
) -> Result<f64, EstimateError> {
    if index >= exact.len() || index >= est.len() {
        return Err(EstimateError::IndexOutOfRange { index, n: exact.len() });
    }
    let a = exact[index];
    if a == 0.0 {
        return Err(EstimateError::ZeroExactComponent(index));
    }
    Ok((est[index] - a).abs() / a.abs())
}
