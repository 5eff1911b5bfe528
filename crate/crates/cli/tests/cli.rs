use std::process::{Command, Output};

fn diagest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diagest"))
        .args(args)
        .env_remove("DIAGEST_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn estimate_writes_diagonal_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = diagest(&[
        "estimate", "--test-matrix", "tridiag:100:0.5", "--dist", "rademacher", "--samples", "1024", "--seed", "7",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,estimate,exact,abs_err"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    for r in &rows {
        assert_eq!(r[2], 1.0);
        assert!((r[3] - (r[1] - r[2]).abs()).abs() < 1e-15);
    }

    // same seed, same bytes, regardless of threading
    let again = dir.path().join("e.csv");
    diagest(&[
        "estimate", "--test-matrix", "tridiag:100:0.5", "--samples", "1024", "--seed", "7", "--sequential", "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(text, std::fs::read_to_string(&again).unwrap());
}

#[test]
fn estimate_from_matrix_market_file() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("a.mtx");
    std::fs::write(&mtx, "%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n1 1 2.0\n2 2 3.0\n3 3 4.0\n2 1 0.5\n").unwrap();
    let o = diagest(&["estimate", "--matrix", mtx.to_str().unwrap(), "--dist", "normalized-gaussian", "--samples", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);

    let bad = dir.path().join("b.mtx");
    std::fs::write(&bad, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 2.0\n").unwrap();
    let o = diagest(&["estimate", "--matrix", bad.to_str().unwrap(), "--samples", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plan_normwise_prints_count_and_constants() {
    let o = diagest(&["plan", "--test-matrix", "rank1:100:0.1", "--dist", "rademacher", "--eps", "0.1", "--delta", "1e-16"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let n: u64 = text.lines().next().unwrap().strip_prefix("N = ").unwrap().parse().unwrap();
    assert!((9_000..10_500).contains(&n), "{n}");
    for key in ["K1 = ", "K2 = ", "d = ", "Delta1 = ", "Delta2 = "] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn plan_component_methods() {
    for method in ["rademacher", "gaussian", "normalized-gaussian"] {
        let o = diagest(&[
            "plan", "--test-matrix", "tridiag:100:0.9", "--component", "50", "--dist", method, "--eps", "0.5", "--delta",
            "0.05",
        ]);
        assert_eq!(o.status.code(), Some(0), "{method}");
        assert!(stdout(&o).starts_with("N = "));
    }
}

#[test]
fn gaussian_normwise_plan_is_infeasible_at_n_100() {
    let o = diagest(&["plan", "--dist", "gaussian-normwise", "--test-matrix", "tridiag:100:0.5", "--eps", "0.1", "--delta", "0.01"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("window = "));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));
}

#[test]
fn bounds_lists_constants() {
    let o = diagest(&["bounds", "--test-matrix", "decay:50:0.5", "--dist", "sparse:3", "--component", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("[normwise]") && text.contains("s = 3") && text.contains("[component 0]"));
}

#[test]
fn experiment_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = diagest(&[
        "experiment", "--id", "3", "--replicates", "3", "--samples", "16,32", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("experiment,matrix,theta,dist,s,N,replicate,seed,nre,bound_eps,q025,q975,mean_nre\n"));
    // 4 sparsities x 2 N x (3 replicates + 1 aggregate) + header
    assert_eq!(text.lines().count(), 33);

    let o = Command::new(env!("CARGO_BIN_EXE_diagest"))
        .args(["experiment", "--id", "4", "--replicates", "2", "--samples", "16"])
        .env("DIAGEST_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("experiment4.csv").exists());
}

#[test]
fn exit_codes_for_usage_and_data_errors() {
    assert_eq!(diagest(&["--help"]).status.code(), Some(0));
    assert_eq!(diagest(&[]).status.code(), Some(1));
    assert_eq!(diagest(&["estimate", "--samples", "4"]).status.code(), Some(1));
    assert_eq!(diagest(&["estimate", "--test-matrix", "tridiag:100", "--samples", "4"]).status.code(), Some(1));
    assert_eq!(diagest(&["estimate", "--test-matrix", "tridiag:10:0.5", "--dist", "sparse:1.5", "--samples", "4"]).status.code(), Some(1));
    assert_eq!(diagest(&["plan", "--test-matrix", "tridiag:10:0.5", "--eps", "0.1", "--delta", "2"]).status.code(), Some(1));
    assert_eq!(diagest(&["experiment", "--id", "5"]).status.code(), Some(1));
    assert_eq!(diagest(&["experiment", "--id", "1", "--samples", "64,16"]).status.code(), Some(1));
    assert_eq!(diagest(&["estimate", "--matrix", "/nonexistent.mtx", "--samples", "4"]).status.code(), Some(2));
    assert_eq!(diagest(&["estimate", "--test-matrix", "tridiag:1:0.5", "--samples", "4"]).status.code(), Some(2));
}
