use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diagest::bounds::{
    closed_form_constants, component_constants, gaussian_window, normwise_constants, plan_samples_component,
    plan_samples_gaussian_normwise, plan_samples_normwise, ComponentMethod, GaussianNormwisePlan, NormwiseAnalysis,
    WindowEdge,
};
use diagest::harness::{default_output_path, run_experiment, ExperimentConfig};
use diagest::operators::LoadedMatrix;
use diagest::{
    load_matrix_market, make_test_matrix, DenseSymmetric, Estimator, Execution, ProbeDistribution, RngState,
    SymmetricOperator, TestMatrix, TestMatrixKind,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "diagest", version, about = "Monte Carlo diagonal estimation with (ε, δ) guarantees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the diagonal and write index,estimate,exact,abs_err as CSV.
    Estimate(EstimateArgs),
    /// Number of samples for an (ε, δ) target.
    Plan(PlanArgs),
    /// Print every bound constant that applies to a matrix.
    Bounds(BoundsArgs),
    /// Run one of the reference experiments and write its CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct MatrixSource {
    /// Test matrix as kind:n:theta, kind one of rank1, decay, tridiag.
    #[arg(long, value_name = "KIND:N:THETA")]
    test_matrix: Option<String>,
    /// Symmetric matrix in Matrix Market format.
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// rademacher, sparse:<s>, gaussian or normalized-gaussian.
    #[arg(long, default_value = "rademacher")]
    dist: String,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// Normwise: rademacher, sparse:<s> or gaussian-normwise.
    /// With --component: rademacher, gaussian or normalized-gaussian.
    #[arg(long, default_value = "rademacher")]
    dist: String,
    /// Plan for a single diagonal entry (0-based) instead of the whole diagonal.
    #[arg(long)]
    component: Option<usize>,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    source: MatrixSource,
    /// rademacher or sparse:<s>.
    #[arg(long, default_value = "rademacher")]
    dist: String,
    /// Also print the componentwise constants of this entry (0-based).
    #[arg(long)]
    component: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    id: u8,
    /// Defaults to $DIAGEST_OUT_DIR/experiment<id>.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated, strictly increasing sample counts.
    #[arg(long, value_delimiter = ',')]
    samples: Option<Vec<usize>>,
    /// Failure probability of the bound column.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl Failure {
    fn data(e: impl std::fmt::Display) -> Self {
        Failure::Data(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

enum Source {
    Test(TestMatrix),
    File(LoadedMatrix),
}

impl Source {
    fn operator(&self) -> &dyn SymmetricOperator {
        match self {
            Source::Test(m) => m,
            Source::File(m) => m,
        }
    }

    fn dense(&self) -> Result<DenseSymmetric, Failure> {
        self.operator().to_dense().map_err(Failure::data)
    }
}

fn parse_test_matrix(spec: &str) -> Result<TestMatrix, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [kind, n, theta] = parts[..] else {
        return Err(Failure::Usage(format!("test matrix `{spec}` is not of the form kind:n:theta")));
    };
    let kind: TestMatrixKind = kind.parse().map_err(Failure::Usage)?;
    let n: usize = n.parse().map_err(|_| Failure::Usage(format!("bad dimension `{n}`")))?;
    let theta: f64 = theta.parse().map_err(|_| Failure::Usage(format!("bad theta `{theta}`")))?;
    make_test_matrix(kind, n, theta).map_err(Failure::data)
}

fn load(src: &MatrixSource) -> Result<Source, Failure> {
    match (&src.test_matrix, &src.matrix) {
        (Some(spec), _) => parse_test_matrix(spec).map(Source::Test),
        (_, Some(path)) => load_matrix_market(path).map(Source::File).map_err(Failure::data),
        _ => Err(Failure::Usage("one of --test-matrix or --matrix is required".into())),
    }
}

fn check_target(eps: f64, delta: f64) -> CliResult {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Failure::Usage(format!("--eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Failure::Usage(format!("--delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn sparsity_of(dist: &str) -> Result<f64, Failure> {
    match dist.parse::<ProbeDistribution>() {
        Ok(d) => d
            .sparsity()
            .ok_or_else(|| Failure::Usage(format!("`{dist}` has no Rademacher sparsity parameter"))),
        Err(e) => Err(Failure::Usage(e.to_string())),
    }
}

fn estimate(args: EstimateArgs) -> CliResult {
    let estimator: Estimator = args.dist.parse().map_err(|e| Failure::Usage(format!("--dist: {e}")))?;
    if args.samples == 0 {
        return Err(Failure::Usage("--samples must be at least 1".into()));
    }
    let source = load(&args.source)?;
    let op = source.operator();
    let exec = if args.sequential { Execution::Sequential } else { Execution::Parallel };
    let est = estimator
        .run(op, args.samples, RngState::new(args.seed), exec)
        .and_then(|e| e.value())
        .map_err(Failure::data)?;
    let exact = op.exact_diag().map_err(Failure::data)?;

    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(File::create(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut text = String::from("index,estimate,exact,abs_err\n");
    for i in 0..est.len() {
        let (e, x) = (est[i], exact[i]);
        text.push_str(&format!("{i},{e:.16e},{x:.16e},{:.16e}\n", (e - x).abs()));
    }
    sink.write_all(text.as_bytes()).map_err(Failure::data)?;
    log::info!("{} samples of {estimator} on n = {}", args.samples, op.dim());
    Ok(())
}

fn print_normwise(analysis: &NormwiseAnalysis) {
    match analysis {
        NormwiseAnalysis::Diagonal => println!("matrix is diagonal: one Rademacher sample recovers it exactly"),
        NormwiseAnalysis::Bounded(c) => {
            println!("s = {}", c.s);
            println!("K1 = {:.10e}", c.k1);
            println!("K2 = {:.10e}", c.k2);
            println!("d = {:.10e}", c.d);
            println!("Delta1 = {:.10e}", c.delta1);
            println!("Delta2 = {:.10e}", c.delta2);
            println!("Delta3 = {:.10e}", c.delta3());
            println!("||D_A|| = {:.10e}", c.norm_da);
        }
    }
}

fn report_window(plan: &GaussianNormwisePlan) -> CliResult {
    match *plan {
        GaussianNormwisePlan::Feasible { samples } => {
            println!("N = {samples}");
            Ok(())
        }
        GaussianNormwisePlan::Infeasible { samples, lower, upper, violated } => {
            println!("N = {samples} (infeasible)");
            println!("window = [{lower:.4}, {upper}]");
            let why = if lower > upper {
                "the validity window 8 e ln n <= N <= n is empty".to_string()
            } else {
                match violated {
                    WindowEdge::Lower => format!("N = {samples} is below 8 e ln n = {lower:.4}"),
                    WindowEdge::Upper => format!("N = {samples} exceeds n = {upper}"),
                }
            };
            Err(Failure::Infeasible(why))
        }
    }
}

fn plan(args: PlanArgs) -> CliResult {
    check_target(args.eps, args.delta)?;
    let source = load(&args.source)?;
    let a = source.dense()?;
    if let Some(index) = args.component {
        let method: ComponentMethod = args.dist.parse().map_err(Failure::Usage)?;
        let c = component_constants(&a, index).map_err(Failure::data)?;
        let n = plan_samples_component(&c, method, args.eps, args.delta).map_err(Failure::data)?;
        println!("N = {n}");
        println!("a_ii = {:.10e}", c.a_ii);
        println!("off2sq = {:.10e}", c.off_sq);
        println!("Delta1i = {:.10e}", c.delta1);
        println!("Delta2i = {:.10e}", c.delta2);
        match c.psi {
            Some(p) => println!("Psi = {p:.10e}"),
            None => println!("Psi = undefined (diagonal row)"),
        }
        return Ok(());
    }
    if args.dist == "gaussian-normwise" {
        let plan = plan_samples_gaussian_normwise(&a, args.eps, args.delta).map_err(Failure::data)?;
        return report_window(&plan);
    }
    let s = sparsity_of(&args.dist)?;
    let analysis = normwise_constants(&a, s).map_err(Failure::data)?;
    let n = plan_samples_normwise(&analysis, args.eps, args.delta).map_err(Failure::data)?;
    println!("N = {n}");
    print_normwise(&analysis);
    Ok(())
}

fn bounds(args: BoundsArgs) -> CliResult {
    let s = sparsity_of(&args.dist)?;
    let source = load(&args.source)?;
    let a = source.dense()?;
    println!("[normwise]");
    print_normwise(&normwise_constants(&a, s).map_err(Failure::data)?);
    if let Source::Test(m) = &source {
        let c = closed_form_constants(m);
        println!("[closed form, s = 1]");
        println!("K1 = {:.10e}", c.k1);
        println!("K2 = {:.10e}", c.k2);
        println!("d = {:.10e}", c.d);
    }
    let (lo, hi) = gaussian_window(a.dim());
    println!("[gaussian normwise]");
    println!("||A||_inf / ||D_A||_inf = {:.10e}", a.norm_inf() / a.diagonal().max_abs());
    println!("window = [{lo:.4}, {hi}]{}", if lo > hi { " (empty)" } else { "" });
    if let Some(index) = args.component {
        let c = component_constants(&a, index).map_err(Failure::data)?;
        println!("[component {index}]");
        println!("a_ii = {:.10e}", c.a_ii);
        println!("off2sq = {:.10e}", c.off_sq);
        println!("L1 = {:.10e}", c.l1);
        println!("L2 = {:.10e}", c.l2);
        println!("Delta1i = {:.10e}", c.delta1);
        println!("Delta2i = {:.10e}", c.delta2);
        if let Some(p) = c.psi {
            println!("Psi = {p:.10e}");
        }
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> CliResult {
    let mut config = ExperimentConfig::preset(args.id).map_err(|e| Failure::Usage(e.to_string()))?;
    config.out = args.out.unwrap_or_else(|| default_output_path(args.id));
    if let Some(r) = args.replicates {
        config.replicates = r;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(delta) = args.delta {
        config.delta = Some(delta);
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    if args.sequential {
        config.execution = Execution::Sequential;
    }
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let out = run_experiment(&config).map_err(Failure::data)?;
    println!("{} rows written to {}", out.records.len() + out.cells.len(), out.path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Plan(a) => plan(a),
        Command::Bounds(a) => bounds(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Infeasible(m)) => {
            eprintln!("infeasible: {m}");
            ExitCode::from(EXIT_INFEASIBLE)
        }
    }
}
