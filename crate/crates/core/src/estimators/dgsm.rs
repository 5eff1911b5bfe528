//! Derivative-based global sensitivity metrics: the diagonal of
//! `C = E[∇f(X) ∇f(X)ᵀ]`, estimated by `(1/N) Σ ∇f(x_k) ∘ ∇f(x_k)`.

use rand::Rng;

use super::{run_chunked, DiagonalEstimate, EstimateError, EstimatorMode};
use crate::operators::{DenseSymmetric, DiagonalVector, SymmetricOperator};
use crate::par::Execution;
use crate::probes::RngState;

/// Samples `∇f(x)` at `x` drawn from the input law.
pub trait GradientOracle: Sync {
    fn dim(&self) -> usize;

    /// Gradient at one input sample drawn from the stream at `state`.
    fn sample_gradient(&self, state: RngState) -> (Vec<f64>, RngState);

    /// Almost-sure bound `β >= ||∇f||_∞`, when known. Every draw is checked
    /// against it.
    fn sup_norm_bound(&self) -> Option<f64> {
        None
    }
}

fn uniform_cube(n: usize, state: RngState) -> Vec<f64> {
    let mut rng = state.stream();
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `f(x) = hᵀ x` on `X ~ U[-1, 1]^n`; the gradient is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub h: Vec<f64>,
}

impl LinearModel {
    pub fn new(h: Vec<f64>) -> Self {
        Self { h }
    }

    /// `diag(h hᵀ)`.
    pub fn exact_dgsm(&self) -> DiagonalVector {
        self.h.iter().map(|x| x * x).collect::<Vec<_>>().into()
    }
}

impl GradientOracle for LinearModel {
    fn dim(&self) -> usize {
        self.h.len()
    }

    fn sample_gradient(&self, state: RngState) -> (Vec<f64>, RngState) {
        (self.h.clone(), state.next())
    }

    fn sup_norm_bound(&self) -> Option<f64> {
        Some(self.h.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
    }
}

/// `f(x) = ½ xᵀ S x` on `X ~ U[-1, 1]^n`, so `∇f(x) = S x` and `C = S²/3`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    s: DenseSymmetric,
}

impl QuadraticModel {
    pub fn new(s: DenseSymmetric) -> Self {
        Self { s }
    }

    /// `S = diag(exp(-10 j / n))`, `j = 1..n`.
    pub fn exponential_diagonal(n: usize) -> Self {
        let d: Vec<f64> = (1..=n).map(|j| (-10.0 * j as f64 / n as f64).exp()).collect();
        Self::new(DenseSymmetric::from_diagonal(&d).expect("positive dimension"))
    }

    pub fn matrix(&self) -> &DenseSymmetric {
        &self.s
    }

    /// `diag(S²) / 3`.
    pub fn exact_dgsm(&self) -> DiagonalVector {
        let n = self.s.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.s.get(i, j).powi(2)).sum::<f64>() / 3.0)
            .collect::<Vec<_>>()
            .into()
    }
}

impl GradientOracle for QuadraticModel {
    fn dim(&self) -> usize {
        self.s.dim()
    }

    fn sample_gradient(&self, state: RngState) -> (Vec<f64>, RngState) {
        let x = uniform_cube(self.s.dim(), state);
        let g = self.s.apply(&x).expect("dimension matches");
        (g, state.next())
    }

    fn sup_norm_bound(&self) -> Option<f64> {
        Some(self.s.norm_inf())
    }
}

pub fn estimate_dgsm<G: GradientOracle + ?Sized>(
    oracle: &G,
    samples: usize,
    seed: u64,
) -> Result<DiagonalEstimate, EstimateError> {
    estimate_dgsm_with(oracle, samples, RngState::new(seed), Execution::default())
}

pub fn estimate_dgsm_with<G: GradientOracle + ?Sized>(
    oracle: &G,
    samples: usize,
    start: RngState,
    exec: Execution,
) -> Result<DiagonalEstimate, EstimateError> {
    let n = oracle.dim();
    let bound = oracle.sup_norm_bound();
    run_chunked(n, EstimatorMode::Unnormalized, samples, start, exec, |est, first, len| {
        let mut state = first;
        for _ in 0..len {
            let (g, next) = oracle.sample_gradient(state);
            if g.len() != n {
                return Err(EstimateError::DimensionMismatch { expected: n, found: g.len() });
            }
            if let Some(beta) = bound {
                let sup = g.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                if sup > beta * (1.0 + 1e-12) {
                    return Err(EstimateError::GradientBoundViolated { bound: beta, found: sup });
                }
            }
            est.update(&g, &g)?;
            state = next;
        }
        Ok(())
    })
}
