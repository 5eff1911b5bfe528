//! Matrix-free Monte Carlo estimation of the diagonal of a symmetric matrix.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`operators`]: symmetric operators seen only through `A v`, the three
//!   parameterized test families and a Matrix Market reader.
//! * [`probes`]: seeded, counter-addressed probe vectors (Rademacher, sparse
//!   Rademacher, Gaussian).
//! * [`estimators`]: the unnormalized `(A w) ∘ w` estimator, the normalized
//!   Gaussian estimator, the gradient second-moment (DGSM) estimator and the
//!   error measures used to score them.
//! * [`bounds`]: closed-form constants, tail probabilities and `(ε, δ)` sample
//!   planners for every estimator.
//! * [`harness`]: reproducible experiments written as CSV, plus the
//!   statistics (quantiles, Kolmogorov–Smirnov against Student t) they need.
//!
//! With the default `parallel` feature, probes and replicates are spread over
//! a rayon pool. Each probe draws from its own counter-addressed stream and
//! partial sums are merged in a fixed order, so parallel and sequential runs
//! produce bitwise identical results.

pub mod bounds;
pub mod estimators;
pub mod harness;
pub mod numeric;
pub mod operators;
pub mod par;
pub mod probes;

pub use bounds::{
    component_constants, component_tail_bound, dgsm_constants, normwise_constants, plan_samples_component,
    ComponentConstants, ComponentMethod, DgsmConstants, NormwiseAnalysis, NormwiseConstants,
};
pub use estimators::{
    componentwise_relative_error, estimate_dgsm, estimate_diagonal, estimate_diagonal_normalized,
    normwise_relative_error, DiagonalEstimate, EstimateError, Estimator, EstimatorMode, GradientOracle,
};
pub use operators::{
    load_matrix_market, make_test_matrix, DenseSymmetric, DiagonalVector, OperatorError, SymmetricOperator,
    TestMatrix, TestMatrixKind,
};
pub use harness::{run_experiment, ExperimentConfig, HarnessError, RunRecord};
pub use par::Execution;
pub use probes::{ProbeDistribution, ProbeError, RngState};
