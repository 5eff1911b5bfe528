//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use diagest::bounds::{
    closed_form_constants, component_constants, gaussian_window, plan_gaussian_normwise_from_norms,
    plan_samples_component, plan_samples_gaussian_normwise, ComponentMethod, GaussianNormwisePlan, NormwiseAnalysis,
};
use diagest::estimators::{estimate_dgsm, LinearModel, QuadraticModel};
use diagest::harness::{ks_student_t, normalized_error_sample, run_experiment, ExperimentConfig};
use diagest::probes::derive_seed;
use diagest::{
    estimate_diagonal, estimate_diagonal_normalized, normwise_constants, normwise_relative_error, DenseSymmetric,
    Execution, ProbeDistribution, RngState, SymmetricOperator, TestMatrixKind,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn constants_reproduction() -> Outcome {
    let mut worst = 0.0_f64;
    for kind in TestMatrixKind::ALL {
        for theta in kind.theta_grid(5) {
            let m = diagest::make_test_matrix(kind, 100, theta).map_err(|e| e.to_string())?;
            let cf = closed_form_constants(&m);
            let ew = match normwise_constants(&m.to_dense().unwrap(), 1.0).unwrap() {
                NormwiseAnalysis::Bounded(c) => c,
                NormwiseAnalysis::Diagonal => return Err(format!("{kind} θ={theta} reported diagonal")),
            };
            for (a, b) in [(cf.k1, ew.k1), (cf.k2, ew.k2), (cf.d, ew.d), (cf.delta1, ew.delta1), (cf.delta2, ew.delta2)] {
                worst = worst.max(rel(a, b));
            }
        }
    }
    check(worst <= 1e-10, format!("max relative deviation {worst:.2e} (tol 1e-10)"))
}

fn diagonal_exactness() -> Outcome {
    let mut state = RngState::new(2024).stream();
    let d: Vec<f64> = (0..200)
        .map(|_| {
            let u: f64 = rand::Rng::random_range(&mut state, 0.1..10.0);
            if rand::Rng::random_bool(&mut state, 0.5) {
                u
            } else {
                -u
            }
        })
        .collect();
    let a = DenseSymmetric::from_diagonal(&d).unwrap();
    let exact = a.diagonal();
    let mut worst = 0.0_f64;
    for seed in 0..5 {
        let r = estimate_diagonal(&a, &ProbeDistribution::Rademacher, 1, seed).unwrap().value().unwrap();
        let g = estimate_diagonal_normalized(&a, 1, seed).unwrap().value().unwrap();
        worst = worst.max(normwise_relative_error(&r, &exact).unwrap());
        worst = worst.max(normwise_relative_error(&g, &exact).unwrap());
    }
    check(worst <= 1e-14, format!("max NRE at N=1 over 5 seeds: {worst:.2e}"))
}

fn unbiasedness() -> Outcome {
    let m = diagest::make_test_matrix(TestMatrixKind::TridiagToeplitz, 50, 0.5).unwrap();
    let exact = m.exact_diag().unwrap();
    let reps = 10_000;
    let draws = Execution::Parallel.map_range(0..reps, |r| {
        let start = RngState::new(derive_seed(3, &[r as u64]));
        let est = diagest::estimators::estimate_diagonal_with(&m, &ProbeDistribution::Rademacher, 1, start, Execution::Sequential);
        est.unwrap().value().unwrap().into_inner()
    });
    let mut worst = 0.0_f64;
    for i in 0..50 {
        let xs: Vec<f64> = draws.iter().map(|v| v[i]).collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        worst = worst.max((mean - exact[i]).abs() / se);
    }
    check(worst <= 4.0, format!("max |mean - a_ii| = {worst:.2} standard errors"))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn convergence_slope() -> Outcome {
    let grid: Vec<usize> = (4..=12).map(|k| 1 << k).collect();
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in TestMatrixKind::ALL {
        let (lo, hi) = kind.theta_range();
        let m = diagest::make_test_matrix(kind, 100, 0.5 * (lo + hi)).unwrap();
        let exact = m.exact_diag().unwrap();
        for dist in [ProbeDistribution::Rademacher, ProbeDistribution::Gaussian] {
            let means: Vec<f64> = grid
                .iter()
                .enumerate()
                .map(|(ni, &n)| {
                    let nres = Execution::Parallel.map_range(0..20, |seed| {
                        let start = RngState::new(derive_seed(seed as u64, &[ni as u64]));
                        let est = diagest::estimators::estimate_diagonal_with(&m, &dist, n, start, Execution::Sequential);
                        normwise_relative_error(&est.unwrap().value().unwrap(), &exact).unwrap()
                    });
                    nres.iter().sum::<f64>() / 20.0
                })
                .collect();
            let lx: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
            let ly: Vec<f64> = means.iter().map(|v| v.ln()).collect();
            let s = slope(&lx, &ly);
            ok &= (s + 0.5).abs() <= 0.15;
            parts.push(format!("{kind}/{dist} {s:.3}"));
        }
    }
    check(ok, format!("slopes: {}", parts.join(", ")))
}

fn temp_config(id: u8, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(id).unwrap();
    c.out = dir.join(format!("experiment{id}.csv"));
    c
}

fn bound_dominance(dir: &std::path::Path) -> Outcome {
    let out = run_experiment(&temp_config(1, dir)).map_err(|e| e.to_string())?;
    let total = out.cells.len();
    let mut dominated = 0;
    let mut tightest = f64::INFINITY;
    for c in &out.cells {
        let b = c.bound_eps.ok_or("missing bound column")?;
        if b >= c.mean_nre {
            dominated += 1;
        }
        tightest = tightest.min(b / c.mean_nre);
    }
    check(
        dominated == total,
        format!("{dominated}/{total} cells with bound >= mean NRE (min ratio {tightest:.2})"),
    )
}

fn sparse_degradation(dir: &std::path::Path) -> Outcome {
    let out = run_experiment(&temp_config(3, dir)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut min_s50 = f64::INFINITY;
    let mut violations = Vec::new();
    for &n in &ExperimentConfig::preset(3).unwrap().samples {
        let med: Vec<(f64, f64)> = out
            .cells
            .iter()
            .filter(|c| c.samples == n)
            .map(|c| (c.s.unwrap(), c.median_nre))
            .collect();
        if med.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 > w[1].1) {
            violations.push(n);
        }
        if n <= 1000 {
            let s50 = med.iter().find(|(s, _)| *s == 50.0).ok_or("no s=50 cell")?.1;
            min_s50 = min_s50.min(s50);
        }
    }
    ok &= violations.is_empty() && min_s50 > 0.1;
    check(
        ok,
        format!("min median NRE at s=50 for N<=1000: {min_s50:.3}; non-monotone N: {violations:?}"),
    )
}

fn estimator_ordering(dir: &std::path::Path) -> Outcome {
    let mut c = temp_config(2, dir);
    c.samples = vec![512];
    let out = run_experiment(&c).map_err(|e| e.to_string())?;
    let mean = |name: &str| out.cells.iter().find(|c| c.dist == name).map(|c| c.mean_nre).unwrap();
    let rad = mean("rademacher");
    let gau = mean("gaussian");
    let sp3 = mean("sparse:3");
    let nor = mean("normalized-gaussian");
    let ok = rad <= nor && nor <= 1.1 * gau && (sp3 - gau).abs() <= 0.25 * gau;
    check(
        ok,
        format!("mean NRE at N=512: rademacher {rad:.4e}, normalized {nor:.4e}, gaussian {gau:.4e}, sparse:3 {sp3:.4e}"),
    )
}

fn student_t_law() -> Outcome {
    let m = diagest::make_test_matrix(TestMatrixKind::TridiagToeplitz, 20, 0.5).unwrap();
    let mut passes = 0;
    for suite in 0..100u64 {
        let errs = normalized_error_sample(&m, 10, 10, 10_000, derive_seed(8, &[suite]), Execution::Parallel)
            .map_err(|e| e.to_string())?;
        if ks_student_t(&errs, 10, 0.01).map_err(|e| e.to_string())?.pass {
            passes += 1;
        }
    }
    check(passes >= 95, format!("{passes}/100 suites pass KS against t(10) at alpha = 0.01"))
}

fn planner_validity() -> Outcome {
    let m = diagest::make_test_matrix(TestMatrixKind::TridiagToeplitz, 100, 0.9).unwrap();
    let dense = m.to_dense().unwrap();
    let exact = m.exact_diag().unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for index in [0, 50] {
        let c = component_constants(&dense, index).unwrap();
        let n = plan_samples_component(&c, ComponentMethod::Rademacher, 0.5, 0.05).unwrap() as usize;
        let trials = 10_000;
        let fails = Execution::Parallel.map_range(0..trials, |t| {
            let start = RngState::new(derive_seed(9, &[index as u64, t as u64]));
            let est = diagest::estimators::estimate_diagonal_with(&m, &ProbeDistribution::Rademacher, n, start, Execution::Sequential)
                .unwrap()
                .value()
                .unwrap();
            ((est[index] - exact[index]).abs() > 0.5 * exact[index].abs()) as usize
        });
        let frac = fails.iter().sum::<usize>() as f64 / trials as f64;
        ok &= frac <= 0.05;
        parts.push(format!("i={index}: N={n}, failure fraction {frac:.4}"));
    }
    check(ok, parts.join("; "))
}

fn dgsm_correctness(dir: &std::path::Path) -> Outcome {
    let quad = QuadraticModel::exponential_diagonal(100);
    let est = estimate_dgsm(&quad, 100_000, 10).map_err(|e| e.to_string())?.value().unwrap();
    let nre = normwise_relative_error(&est, &quad.exact_dgsm()).unwrap();
    let lin = LinearModel::new((1..=100).map(|j| (j as f64 / 7.0).sin()).collect());
    let lin_est = estimate_dgsm(&lin, 1, 0).unwrap().value().unwrap();
    let lin_nre = normwise_relative_error(&lin_est, &lin.exact_dgsm()).unwrap();
    let out = run_experiment(&temp_config(4, dir)).map_err(|e| e.to_string())?;
    let mut dominated = 0;
    for r in &out.records {
        let cell = out.cells.iter().find(|c| c.samples == r.samples).unwrap();
        if cell.bound_eps.unwrap() >= r.nre {
            dominated += 1;
        }
    }
    let ok = nre <= 0.01 && lin_nre <= 1e-15 && dominated == out.records.len();
    check(
        ok,
        format!(
            "quadratic NRE at N=1e5 {nre:.2e}; linear NRE at N=1 {lin_nre:.1e}; bound >= NRE in {dominated}/{} runs",
            out.records.len()
        ),
    )
}

fn gaussian_window_feasibility() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for kind in TestMatrixKind::ALL {
        let (lo, hi) = kind.theta_range();
        let a = diagest::make_test_matrix(kind, 100, 0.5 * (lo + hi)).unwrap().to_dense().unwrap();
        let plan = plan_samples_gaussian_normwise(&a, 0.5, 0.5).unwrap();
        ok &= !plan.is_feasible();
    }
    let (lo100, hi100) = gaussian_window(100);
    parts.push(format!("n=100: window [{lo100:.1}, {hi100}] empty, all families Infeasible"));

    // n = 1000 tridiagonal: ||A||_∞ = 1 + 2θ, ||D_A||_∞ = 1
    let theta: f64 = 0.5;
    let (lo, hi) = gaussian_window(1000);
    let nonempty = lo <= hi;
    let direct = (128.0 * (std::f64::consts::E * 1000f64.ln()).powi(3) / (0.25 * 0.5) * (1.0 + 2.0 * theta).powi(2)).ceil();
    let plan = plan_gaussian_normwise_from_norms(1000, 1.0 + 2.0 * theta, 1.0, 0.5, 0.5).unwrap();
    let in_window = (lo..=hi).contains(&direct);
    ok &= nonempty && plan.samples() as f64 == direct && plan.is_feasible() == in_window;
    parts.push(format!(
        "n=1000: window [{lo:.1}, {hi}] nonempty, planned N={} {}",
        plan.samples(),
        if plan.is_feasible() { "feasible" } else { "outside window, Infeasible" }
    ));

    let big = plan_gaussian_normwise_from_norms(1_000_000_000, 1.0, 1.0, 0.5, 0.5).unwrap();
    ok &= matches!(big, GaussianNormwisePlan::Feasible { .. });
    parts.push(format!("n=1e9 identity: N={} feasible", big.samples()));
    check(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let d = dir.path();
    let criteria: Vec<Criterion> = vec![
        ("constant reproduction", Box::new(constants_reproduction)),
        ("diagonal exactness", Box::new(diagonal_exactness)),
        ("unbiasedness", Box::new(unbiasedness)),
        ("convergence slope", Box::new(convergence_slope)),
        ("bound dominance", Box::new(|| bound_dominance(d))),
        ("sparse degradation", Box::new(|| sparse_degradation(d))),
        ("estimator ordering", Box::new(|| estimator_ordering(d))),
        ("Student t law of normalized errors", Box::new(student_t_law)),
        ("componentwise planner validity", Box::new(planner_validity)),
        ("DGSM correctness", Box::new(|| dgsm_correctness(d))),
        ("Gaussian normwise feasibility window", Box::new(gaussian_window_feasibility)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let timer = Instant::now();
        let (tag, detail) = match run() {
            Ok(msg) => ("PASS", msg),
            Err(msg) => {
                failed += 1;
                ("FAIL", msg)
            }
        };
        println!("criterion {:>2} {tag} {name} ({:.1}s): {detail}", i + 1, timer.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
