use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sls() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sls"));
    c.env_remove("SLS_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    sls().args(args).output().expect("failed to launch sls")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is not JSON")
}

/// Deterministic pseudo-random numbers in (−1, 1).
fn noise(i: usize) -> f64 {
    let x = ((i as f64 + 1.0) * 12.9898).sin() * 43758.5453;
    2.0 * (x - x.floor()) - 1.0
}

/// Header `y,x1,…,x8`; x1..x4 share a factor, y depends on x1..x4.
fn write_data(dir: &Path) -> PathBuf {
    let path = dir.join("data.csv");
    let mut text = String::from("y,x1,x2,x3,x4,x5,x6,x7,x8\n");
    for i in 0..60 {
        let f = noise(1000 + i);
        let xs: Vec<f64> = (0..8).map(|k| if k < 4 { f + 0.4 * noise(i * 8 + k) } else { noise(i * 8 + k) }).collect();
        let y = xs[..4].iter().sum::<f64>() * 0.5 + 0.3 * noise(5000 + i);
        let row: Vec<String> = std::iter::once(y).chain(xs).map(|v| format!("{v:.8}")).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_reports_coefficients_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let out = run(&["fit", "--input", data.to_str().unwrap(), "--response", "y", "--lambda1", "0.05", "--lambda2", "0.5"]);
    let v = stdout_json(&out);
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 8);
    assert_eq!(v["standardized_coefficients"].as_array().unwrap().len(), 8);
    assert_eq!(v["column_names"][0], "x1");
    assert!(v["converged"].as_bool().unwrap());
    assert!(v["kkt_residual"].as_f64().unwrap() <= 1e-6);
    let support: Vec<u64> = v["support"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap()).collect();
    assert!([0, 1, 2, 3].iter().all(|j| support.contains(j)), "support {support:?}");
    assert_eq!(v["gamma"], 3.0);
}

#[test]
fn fit_at_lambda_max_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let d = data.to_str().unwrap();
    let path = stdout_json(&run(&["path", "--input", d, "--response", "y", "--n-lambda", "3"]));
    let fits = path.as_array().unwrap();
    assert_eq!(fits.len(), 3);
    let lmax = fits[0]["lambda1"].as_f64().unwrap();
    for l1 in [format!("{lmax:e}"), "100".to_string()] {
        let v = stdout_json(&run(&["fit", "--input", d, "--response", "y", "--lambda1", &l1, "--scheme", "none"]));
        assert!(v["coefficients"].as_array().unwrap().iter().all(|c| c.as_f64() == Some(0.0)), "{v}");
        assert!(v["support"].as_array().unwrap().is_empty());
    }
}

#[test]
fn cv_writes_fit_and_surface_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let d = data.to_str().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2", "1"].iter().enumerate() {
        let fit = dir.path().join(format!("fit{i}.json"));
        let surface = dir.path().join(format!("surface{i}.tsv"));
        let out = run(&[
            "--threads",
            threads,
            "cv",
            "--input",
            d,
            "--response",
            "y",
            "--scheme",
            "n1",
            "--folds",
            "5",
            "--seed",
            "7",
            "--output",
            fit.to_str().unwrap(),
            "--surface",
            surface.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("best lambda1"));
        let tsv = std::fs::read_to_string(&surface).unwrap();
        assert_eq!(tsv.lines().count(), 1 + 17 * 17);
        assert!(tsv.starts_with("lambda1\tlambda2\tcv_error\tse\n"));
        outputs.push((std::fs::read_to_string(&fit).unwrap(), tsv));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn graph_exports_edge_and_laplacian_lists() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let adj = dir.path().join("adj.txt");
    let lap = dir.path().join("lap.txt");
    let v = stdout_json(&run(&[
        "graph",
        "--input",
        data.to_str().unwrap(),
        "--response",
        "y",
        "--scheme",
        "n1",
        "--adjacency-out",
        adj.to_str().unwrap(),
        "--laplacian-out",
        lap.to_str().unwrap(),
    ]));
    let edges = std::fs::read_to_string(&adj).unwrap();
    assert_eq!(edges.lines().count() as u64, v["n_edges"].as_u64().unwrap());
    assert!(v["n_edges"].as_u64().unwrap() >= 6, "the four factor columns form a clique");
    assert!((v["correlation_cutoff"].as_f64().unwrap() - (3.09f64 / 57f64.sqrt()).tanh()).abs() < 1e-12);
    assert!(std::fs::read_to_string(&lap).unwrap().lines().count() > 0);

    // the exported list reads back as the same graph
    let fit_a = stdout_json(&run(&["fit", "--input", data.to_str().unwrap(), "--response", "y", "--lambda1", "0.05", "--lambda2", "1"]));
    let fit_b = stdout_json(&run(&[
        "fit",
        "--input",
        data.to_str().unwrap(),
        "--response",
        "y",
        "--lambda1",
        "0.05",
        "--lambda2",
        "1",
        "--adjacency",
        adj.to_str().unwrap(),
    ]));
    assert_eq!(fit_a["coefficients"], fit_b["coefficients"]);
}

#[test]
fn diagnose_reports_oracle_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let support = dir.path().join("support.txt");
    std::fs::write(&support, "# true support\n0 0.5\n1 0.5\n2 0.5\n3 0.5\n").unwrap();
    let v = stdout_json(&run(&[
        "diagnose",
        "--input",
        data.to_str().unwrap(),
        "--response",
        "y",
        "--scheme",
        "partition",
        "--block-size",
        "4",
        "--support",
        support.to_str().unwrap(),
        "--lambda2",
        "1",
        "--lambda1",
        "0.1",
        "--sigma",
        "0.3",
    ]));
    let d = &v["diagnostics"];
    assert_eq!(d["support"].as_array().unwrap().len(), 4);
    assert_eq!(d["unbiased"], true);
    assert!(d["c1"].as_f64().unwrap().abs() < 1e-12);
    assert!(v["conditions"]["c_min"].is_number());
    assert_eq!(v["sigma"], 0.3);
    assert_eq!(v["sigma_estimated"], false);

    let est = stdout_json(&run(&[
        "diagnose",
        "--input",
        data.to_str().unwrap(),
        "--response",
        "y",
        "--scheme",
        "partition",
        "--block-size",
        "4",
        "--support",
        support.to_str().unwrap(),
        "--lambda2",
        "1",
        "--lambda1",
        "0.1",
    ]));
    assert_eq!(est["sigma_estimated"], true);
    assert!(est["sigma"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    std::fs::write(
        &cfg,
        r#"
[simulation]
n = 40
p = 20
n_nonzero_clusters = 2
n_replicates = 2
n_test = 20
seed = 3

[[methods]]
name = "SLS-N1"
penalty = "mcp"
graph = { kind = "scheme", scheme = { kind = "threshold", cutoff = { normal = 3.09 } } }
tuning = { folds = 4, lambda1_exponents = [0.0, -1.0, -2.0, -3.0], lambda2_exponents = [-1.0, 1.0] }

[[methods]]
name = "MCP"
penalty = "mcp"
graph = { kind = "none" }
tuning = { folds = 4, lambda1_exponents = [0.0, -1.0, -2.0, -3.0] }
"#,
    )
    .unwrap();
    let records = dir.path().join("records.json");
    let out = run(&["simulate", "--config", cfg.to_str().unwrap(), "--records", records.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tsv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("method\tstructure\tscenario\trho\tpositives\ttrue_positives\tpmse_x100"));
    assert!(lines[1].starts_with("SLS-N1\tI\t"));
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&records).unwrap()).unwrap();
    assert_eq!(rec[0]["replicates"].as_array().unwrap().len(), 2);

    let again = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), tsv);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_data(dir.path());
    let d = data.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["fit", "--input", "/nonexistent/data.csv", "--response", "y", "--lambda1", "0.1"],
        vec!["fit", "--input", d, "--response", "nope", "--lambda1", "0.1"],
        vec!["fit", "--input", d, "--response", "y", "--lambda1", "-1"],
        vec!["fit", "--input", d, "--response", "y", "--lambda1", "0.1", "--scheme", "bogus"],
        vec!["fit", "--input", d, "--response", "y"],
        vec!["fit", "--unknown-flag"],
        vec!["cv", "--input", d, "--response", "y", "--folds", "1"],
        vec!["simulate", "--config", "/nonexistent/study.toml"],
    ];
    for args in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn singular_oracle_system_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    let mut text = String::from("y,a,b,c\n");
    for i in 0..20 {
        let a = noise(i);
        text.push_str(&format!("{},{a},{a},{}\n", noise(100 + i), noise(200 + i)));
    }
    std::fs::write(&path, text).unwrap();
    let support = dir.path().join("s.txt");
    std::fs::write(&support, "0\n1\n").unwrap();
    let out = run(&[
        "diagnose",
        "--input",
        path.to_str().unwrap(),
        "--response",
        "y",
        "--scheme",
        "none",
        "--support",
        support.to_str().unwrap(),
        "--lambda2",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_exits_with_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["fit", "--help"]).status.code(), Some(0));
}
