//! Reproducible experiments written as CSV.
//!
//! Every replicate seeds its own probe stream from
//! `(seed, experiment, θ index, estimator index, N index, replicate)`, so the
//! output depends only on the configuration and never on scheduling.

mod stats;

pub use stats::{kolmogorov_survival, ks_statistic, ks_student_t, quantile_band, KsOutcome};

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bounds::{
    closed_form_constants, dgsm_constants, epsilon_for_samples_dgsm, epsilon_for_samples_normwise, BoundsError,
    NormwiseAnalysis,
};
use crate::estimators::{
    estimate_dgsm_with, estimate_diagonal_normalized_with, normwise_relative_error, EstimateError, Estimator,
    GradientOracle, QuadraticModel,
};
use crate::operators::{make_test_matrix, DiagonalVector, OperatorError, SymmetricOperator, TestMatrix, TestMatrixKind};
use crate::par::Execution;
use crate::probes::{derive_seed, ProbeDistribution, RngState};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DIAGEST_OUT_DIR";

pub const CSV_HEADER: [&str; 13] = [
    "experiment", "matrix", "theta", "dist", "s", "N", "replicate", "seed", "nre", "bound_eps", "q025", "q975",
    "mean_nre",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("empty sample")]
    EmptySample,
    #[error("quantile level {0} is outside [0, 1]")]
    InvalidQuantile(f64),
    #[error("Student t test needs at least 2 degrees of freedom, got {0}")]
    DegreesOfFreedom(u64),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    /// Diagonal estimation on a parameterized test family.
    TestFamilies(Vec<(TestMatrixKind, Vec<f64>)>),
    /// DGSM of `½ xᵀ S x` with `S = diag(exp(-10 j / n))`.
    QuadraticDgsm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: u8,
    pub n: usize,
    pub workload: Workload,
    /// Ignored for the DGSM workload.
    pub estimators: Vec<Estimator>,
    pub samples: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Failure probability for the bound column, if the experiment has one.
    pub delta: Option<f64>,
    pub out: PathBuf,
    pub execution: Execution,
}

/// Powers of two from 16 to 4096.
pub fn default_sample_grid() -> Vec<usize> {
    (4..=12).map(|k| 1usize << k).collect()
}

/// `$DIAGEST_OUT_DIR/experiment<id>.csv`, or the current directory.
pub fn default_output_path(id: u8) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("experiment{id}.csv"))
}

impl ExperimentConfig {
    /// The standard setup of experiment `id`:
    ///
    /// 1. Rademacher on all three families over ten θ each, R = 10, bound at δ = 1e-16.
    /// 2. Rademacher, Gaussian, sparse `s = 3` and normalized Gaussian on the
    ///    identity-plus-rank-one matrix at θ = 0.01, R = 100.
    /// 3. Sparse Rademacher `s ∈ {1, 3, 10, 50}` on the same matrix, R = 100.
    /// 4. DGSM of the quadratic model, R = 100, bound at δ = 0.01.
    pub fn preset(id: u8) -> Result<Self, HarnessError> {
        let rank1 = || vec![(TestMatrixKind::IdentityPlusRankOne, vec![0.01])];
        let sparse = |s: f64| Estimator::Unnormalized(ProbeDistribution::sparse_rademacher(s).expect("valid s"));
        let (workload, estimators, replicates, delta) = match id {
            1 => (
                Workload::TestFamilies(TestMatrixKind::ALL.iter().map(|&k| (k, k.theta_grid(10))).collect()),
                vec![Estimator::Unnormalized(ProbeDistribution::Rademacher)],
                10,
                Some(1e-16),
            ),
            2 => (
                Workload::TestFamilies(rank1()),
                vec![
                    Estimator::Unnormalized(ProbeDistribution::Rademacher),
                    Estimator::Unnormalized(ProbeDistribution::Gaussian),
                    sparse(3.0),
                    Estimator::NormalizedGaussian,
                ],
                100,
                None,
            ),
            3 => (
                Workload::TestFamilies(rank1()),
                [1.0, 3.0, 10.0, 50.0].into_iter().map(sparse).collect(),
                100,
                None,
            ),
            4 => (Workload::QuadraticDgsm, Vec::new(), 100, Some(0.01)),
            other => return Err(HarnessError::InvalidConfig(format!("unknown experiment id {other} (expected 1-4)"))),
        };
        Ok(Self {
            id,
            n: 100,
            workload,
            estimators,
            samples: default_sample_grid(),
            replicates,
            seed: 0,
            delta,
            out: default_output_path(id),
            execution: Execution::default(),
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidConfig(m));
        if self.replicates == 0 {
            return bad("replicate count must be at least 1".into());
        }
        if self.samples.is_empty() || self.samples[0] == 0 {
            return bad("sample grid must be nonempty and positive".into());
        }
        if self.samples.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sample grid must be strictly increasing".into());
        }
        if self.n < 2 {
            return bad(format!("dimension n = {} is too small", self.n));
        }
        if let Some(delta) = self.delta {
            if !(delta > 0.0 && delta < 1.0) {
                return bad(format!("delta = {delta} must lie in (0, 1)"));
            }
        }
        if let Workload::TestFamilies(families) = &self.workload {
            if self.estimators.is_empty() {
                return bad("no estimators selected".into());
            }
            for (kind, thetas) in families {
                let (lo, hi) = kind.theta_range();
                if thetas.is_empty() {
                    return bad(format!("empty theta grid for {kind}"));
                }
                for &t in thetas.iter().filter(|t| !(lo..=hi).contains(*t)) {
                    log::warn!("theta = {t} is outside the documented range [{lo}, {hi}] for {kind}");
                }
            }
        }
        Ok(())
    }
}

/// One replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub experiment: u8,
    pub matrix: String,
    pub theta: Option<f64>,
    pub dist: String,
    pub s: Option<f64>,
    pub samples: usize,
    pub replicate: usize,
    pub seed: u64,
    pub nre: f64,
    pub wall_time: Duration,
}

/// Aggregate over the replicates of one `(matrix, θ, estimator, N)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub experiment: u8,
    pub matrix: String,
    pub theta: Option<f64>,
    pub dist: String,
    pub s: Option<f64>,
    pub samples: usize,
    pub mean_nre: f64,
    pub median_nre: f64,
    pub q025: f64,
    pub q975: f64,
    pub bound_eps: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
    pub path: PathBuf,
}

struct Cell {
    matrix: String,
    theta: Option<f64>,
    dist: String,
    s: Option<f64>,
    samples: usize,
    bound_eps: Option<f64>,
    /// Seed path below the experiment seed, without the replicate index.
    key: [u64; 4],
    job: Job,
}

#[derive(Clone, Copy)]
enum Job {
    Diagonal { family: usize, estimator: Estimator },
    Dgsm,
}

struct Context {
    matrices: Vec<(TestMatrix, DiagonalVector)>,
    dgsm: Option<(QuadraticModel, DiagonalVector)>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.validate()?;
    let mut file = open_output(&config.out)?;
    let (cells, ctx) = build_cells(config)?;

    let reps = config.replicates;
    let results = config.execution.map_range(0..cells.len() * reps, |k| {
        let (cell, rep) = (&cells[k / reps], k % reps);
        run_replicate(config, &ctx, cell, rep)
    });
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        records.push(r?);
    }

    let mut summaries = Vec::with_capacity(cells.len());
    for (c, chunk) in cells.iter().zip(records.chunks(reps)) {
        let mut nres: Vec<f64> = chunk.iter().map(|r| r.nre).collect();
        let mean_nre = nres.iter().sum::<f64>() / reps as f64;
        nres.sort_by(f64::total_cmp);
        summaries.push(CellSummary {
            experiment: config.id,
            matrix: c.matrix.clone(),
            theta: c.theta,
            dist: c.dist.clone(),
            s: c.s,
            samples: c.samples,
            mean_nre,
            median_nre: stats::quantile_sorted(&nres, 0.5),
            q025: stats::quantile_sorted(&nres, 0.025),
            q975: stats::quantile_sorted(&nres, 0.975),
            bound_eps: c.bound_eps,
        });
    }

    let bytes = render_csv(config, &records, &summaries)?;
    file.write_all(&bytes).map_err(|e| io_error(&config.out, e))?;
    log::info!(
        "experiment {}: {} cells x {} replicates written to {}",
        config.id,
        cells.len(),
        reps,
        config.out.display()
    );
    Ok(ExperimentOutput {
        records,
        cells: summaries,
        path: config.out.clone(),
    })
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn open_output(path: &Path) -> Result<File, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(path, e))?;
    }
    File::create(path).map_err(|e| io_error(path, e))
}

fn build_cells(config: &ExperimentConfig) -> Result<(Vec<Cell>, Context), HarnessError> {
    let mut cells = Vec::new();
    let mut ctx = Context {
        matrices: Vec::new(),
        dgsm: None,
    };
    match &config.workload {
        Workload::TestFamilies(families) => {
            let mut theta_index = 0u64;
            for (kind, thetas) in families {
                for &theta in thetas {
                    let m = make_test_matrix(*kind, config.n, theta)?;
                    let exact = m.exact_diag()?;
                    let analysis = config.delta.map(|_| NormwiseAnalysis::Bounded(closed_form_constants(&m)));
                    let family = ctx.matrices.len();
                    ctx.matrices.push((m, exact));
                    for (di, est) in config.estimators.iter().enumerate() {
                        for (ni, &samples) in config.samples.iter().enumerate() {
                            // the bound column is the Rademacher normwise bound
                            let bound_eps = match (analysis, config.delta) {
                                (Some(a), Some(delta)) if est.sparsity() == Some(1.0) => {
                                    Some(epsilon_for_samples_normwise(&a, samples as u64, delta)?)
                                }
                                _ => None,
                            };
                            cells.push(Cell {
                                matrix: kind.short_name().to_string(),
                                theta: Some(theta),
                                dist: est.to_string(),
                                s: est.sparsity(),
                                samples,
                                bound_eps,
                                key: [config.id as u64, theta_index, di as u64, ni as u64],
                                job: Job::Diagonal { family, estimator: *est },
                            });
                        }
                    }
                    theta_index += 1;
                }
            }
        }
        Workload::QuadraticDgsm => {
            let model = QuadraticModel::exponential_diagonal(config.n);
            let exact = model.exact_dgsm();
            let beta = model.sup_norm_bound().expect("quadratic model has a gradient bound");
            let constants = dgsm_constants(exact.values(), beta)?;
            for (ni, &samples) in config.samples.iter().enumerate() {
                let bound_eps = match config.delta {
                    Some(delta) => Some(epsilon_for_samples_dgsm(&constants, samples as u64, delta)?),
                    None => None,
                };
                cells.push(Cell {
                    matrix: "quadratic".to_string(),
                    theta: None,
                    dist: "dgsm".to_string(),
                    s: None,
                    samples,
                    bound_eps,
                    key: [config.id as u64, 0, 0, ni as u64],
                    job: Job::Dgsm,
                });
            }
            ctx.dgsm = Some((model, exact));
        }
    }
    Ok((cells, ctx))
}

fn run_replicate(config: &ExperimentConfig, ctx: &Context, cell: &Cell, rep: usize) -> Result<RunRecord, HarnessError> {
    let [a, b, c, d] = cell.key;
    let seed = derive_seed(config.seed, &[a, b, c, d, rep as u64]);
    let start = RngState::new(seed);
    let timer = Instant::now();
    let nre = match cell.job {
        Job::Diagonal { family, estimator } => {
            let (m, exact) = &ctx.matrices[family];
            let est = estimator.run(m, cell.samples, start, Execution::Sequential)?;
            normwise_relative_error(&est.value()?, exact)?
        }
        Job::Dgsm => {
            let (model, exact) = ctx.dgsm.as_ref().expect("DGSM context");
            let est = estimate_dgsm_with(model, cell.samples, start, Execution::Sequential)?;
            normwise_relative_error(&est.value()?, exact)?
        }
    };
    Ok(RunRecord {
        experiment: config.id,
        matrix: cell.matrix.clone(),
        theta: cell.theta,
        dist: cell.dist.clone(),
        s: cell.s,
        samples: cell.samples,
        replicate: rep,
        seed,
        nre,
        wall_time: timer.elapsed(),
    })
}

/// Seventeen significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn render_csv(config: &ExperimentConfig, records: &[RunRecord], cells: &[CellSummary]) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| io_error(&config.out, e);
    w.write_record(CSV_HEADER).map_err(fail)?;
    let reps = config.replicates;
    for (cell, chunk) in cells.iter().zip(records.chunks(reps)) {
        for r in chunk {
            w.write_record([
                r.experiment.to_string(),
                r.matrix.clone(),
                opt(r.theta),
                r.dist.clone(),
                opt(r.s),
                r.samples.to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                format_float(r.nre),
                opt(cell.bound_eps),
                String::new(),
                String::new(),
                String::new(),
            ])
            .map_err(fail)?;
        }
        w.write_record([
            cell.experiment.to_string(),
            cell.matrix.clone(),
            opt(cell.theta),
            cell.dist.clone(),
            opt(cell.s),
            cell.samples.to_string(),
            String::new(),
            config.seed.to_string(),
            String::new(),
            opt(cell.bound_eps),
            format_float(cell.q025),
            format_float(cell.q975),
            format_float(cell.mean_nre),
        ])
        .map_err(fail)?;
    }
    w.into_inner().map_err(|e| io_error(&config.out, e.error()))
}

/// Standardized componentwise errors `(â_ii - a_ii) sqrt(N / Σ_{j≠i} a_ij²)`
/// of the normalized Gaussian estimator over `replicates` independent runs.
pub fn normalized_error_sample<O: SymmetricOperator + ?Sized>(
    op: &O,
    index: usize,
    samples: usize,
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<f64>, HarnessError> {
    let dense = op.to_dense()?;
    let c = crate::bounds::component_constants(&dense, index)?;
    if c.is_diagonal_row() {
        return Err(HarnessError::InvalidConfig(format!("row {index} has no off-diagonal mass")));
    }
    let scale = (samples as f64 / c.off_sq).sqrt();
    exec.map_range(0..replicates, |r| {
        let start = RngState::new(derive_seed(seed, &[r as u64]));
        let est = estimate_diagonal_normalized_with(op, samples, start, Execution::Sequential)?;
        Ok((est.value()?[index] - c.a_ii) * scale)
    })
    .into_iter()
    .collect()
}
