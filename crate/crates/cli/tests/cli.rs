//! End-to-end runs of the `p4cm` binary: output files, exit codes and error bodies.

use p4cm_core::fredholm::KernelSpec;
use p4cm_core::painleve::exact_half;
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn p4cm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_p4cm")).args(args).env_remove("P4CM_TOL").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_body(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr is a JSON error body")
}

/// Rows of a CSV table as numbers; empty fields become NaN.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect()).collect();
    (header, rows)
}

#[test]
fn solve_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.csv");
    let out = p4cm(&["solve", "--alpha", "0.5", "--kappa", "0.3", "--from", "8", "--to", "-5", "--step", "0.01", "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&path);
    assert_eq!(header, ["x", "q", "dq", "H", "sigma"]);
    assert_eq!(rows.len(), 1301);
    let worst = rows.iter().map(|r| (r[1] - exact_half(r[0], 0.3).unwrap()).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-7, "{worst}");
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("half.poles.json")).unwrap()).unwrap();
    assert!(manifest["poles"].as_array().unwrap().is_empty());
}

#[test]
fn zero_kappa_gives_the_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.csv");
    let out = p4cm(&["solve", "--alpha", "0.5", "--kappa", "0", "--to", "-5", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let (_, rows) = table(&path);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[1] == 0.0));
}

#[test]
fn kappa_above_threshold_records_a_pole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pole.csv");
    let out = p4cm(&["solve", "--alpha", "0.5", "--kappa", "1.2", "--to", "-3", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("pole.poles.json")).unwrap()).unwrap();
    let poles = manifest["poles"].as_array().unwrap();
    assert!(!poles.is_empty());
    assert_eq!(poles[0]["residue"].as_i64().unwrap().abs(), 1);
}

#[test]
fn json_trajectory_carries_points_and_poles() {
    let out = p4cm(&["solve", "--alpha", "0.5", "--kappa", "1.2", "--to", "-1", "--step", "0.5", "--format", "json"]);
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["n_plus"].as_u64().unwrap() + doc["n_minus"].as_u64().unwrap(), 1);
    assert!(doc["points"].as_array().unwrap().len() > 10);
    assert!(doc["points"][0]["hamiltonian"].is_f64());
}

#[test]
fn classify_reports_the_regime() {
    let osc = stdout_json(&p4cm(&["classify", "--alpha", "0", "--kappa", "0.1"]));
    assert_eq!(osc["regime"], "oscillatory");
    assert!(osc["b1"].as_f64().unwrap() > 0.0);
    let trivial = stdout_json(&p4cm(&["classify", "--alpha", "0", "--kappa", "0"]));
    assert_eq!(trivial["regime"], "trivial");
    let kappa = (1.0 / std::f64::consts::PI).to_string();
    let sep = stdout_json(&p4cm(&["classify", "--alpha", "0", "--kappa", &kappa]));
    assert_eq!(sep["regime"], "separatrix");
    let sing = stdout_json(&p4cm(&["classify", "--alpha", "0", "--kappa", "0.9"]));
    assert_eq!(sing["regime"], "singular_oscillatory");
    assert!(sing["b2"].is_f64());
}

#[test]
fn grid_output_follows_the_input_order() {
    let out = p4cm(&["classify", "--grid", "--alphas", "-0.4:0.4:9", "--kappas", "0:1:11"]);
    assert!(out.status.success());
    let rows = stdout_json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 99);
    for (i, row) in rows.iter().enumerate() {
        let alpha = -0.4 + 0.8 * (i / 11) as f64 / 8.0;
        let kappa = (i % 11) as f64 / 10.0;
        assert!((row["alpha"].as_f64().unwrap() - alpha).abs() < 1e-12);
        assert!((row["kappa"].as_f64().unwrap() - kappa).abs() < 1e-12);
    }
}

#[test]
fn verification_suites_pass() {
    for args in [
        vec!["verify", "--suite", "exact-half"],
        vec!["verify", "--suite", "hermite"],
        vec!["verify", "--suite", "sigma-det", "--nu", "1.3", "--gamma", "0.1"],
    ] {
        let out = p4cm(&args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let report = stdout_json(&out);
        assert_eq!(report["passed"], true);
        assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    }
}

#[test]
fn failed_checks_exit_with_the_verification_code() {
    // the +infinity branch of the Hamiltonian is off by its O(x^-2) correction at x = 6
    let out = p4cm(&["verify", "--suite", "hamiltonian"]);
    assert_eq!(out.status.code(), Some(4));
    let report = stdout_json(&out);
    assert_eq!(report["passed"], false);
    let body = error_body(&out);
    assert_eq!(body["code"], 4);
    assert!(!body["context"]["failed"].as_array().unwrap().is_empty());
}

#[test]
fn invalid_input_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    for tol in ["1", "0", "-1e-9", "nan"] {
        let out = p4cm(&["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "-5", "--tol", tol, "-o", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "tol {tol}");
        let body = error_body(&out);
        assert_eq!(body["code"], 2);
        assert!(body["message"].as_str().unwrap().contains("tol"));
    }
    for args in [
        vec!["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "9"],
        vec!["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "-5", "--from", "3"],
        vec!["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "-5", "--step", "0"],
        vec!["solve", "--alpha", "inf", "--kappa", "0.3", "--to", "-5"],
        vec!["solve", "--alpha", "0.5", "--to", "-5"],
        vec!["fredholm", "--nu", "1", "--gamma", "0.1", "--from", "0", "--to", "1", "--nodes", "0"],
        vec!["total-integral", "--alpha", "0", "--kappa", "0.9"],
        vec!["classify", "--grid", "--alphas", "0:1", "--kappas", "0:1:2"],
    ] {
        let mut full = args.clone();
        full.extend(["-o", path.to_str().unwrap()]);
        let out = p4cm(&full);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_body(&out)["code"], 2);
    }
    assert!(!path.exists());
    assert!(!dir.path().join("bad.poles.json").exists());
    let missing = dir.path().join("no/such/dir/out.csv");
    let out = p4cm(&["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "-5", "-o", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_its_code() {
    let out = p4cm(&["fredholm", "--nu", "1", "--gamma", "10", "--from", "-2", "--to", "-2"]);
    assert_eq!(out.status.code(), Some(3));
    let body = error_body(&out);
    assert_eq!(body["code"], 3);
    assert_eq!(body["context"]["kind"], "non_positive_determinant");
}

#[test]
fn identical_runs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = p4cm(&["solve", "--alpha", "0", "--kappa", "0.6", "--to", "-6", "-o", path.to_str().unwrap()]);
        assert!(out.status.success());
        let stem = name.trim_end_matches(".csv");
        (std::fs::read(&path).unwrap(), std::fs::read(dir.path().join(format!("{stem}.poles.json"))).unwrap())
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let fred = || p4cm(&["fredholm", "--nu", "1.3", "--gamma", "0.1", "--from", "-1", "--to", "2", "--sigma"]).stdout;
    assert_eq!(fred(), fred());
}

#[test]
fn tolerance_comes_from_the_environment() {
    let env = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_p4cm"))
            .args(["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "-2"])
            .env("P4CM_TOL", tol)
            .output()
            .unwrap()
    };
    let bad = env("5");
    assert_eq!(bad.status.code(), Some(2));
    let loose = env("1e-5");
    let tight = env("1e-11");
    assert!(loose.status.success() && tight.status.success());
    // a different tolerance takes different steps
    assert_ne!(loose.stdout, tight.stdout);
    let flag = Command::new(env!("CARGO_BIN_EXE_p4cm"))
        .args(["solve", "--alpha", "0.5", "--kappa", "0.3", "--to", "-2", "--tol", "1e-11"])
        .env("P4CM_TOL", "1e-5")
        .output()
        .unwrap();
    assert_eq!(flag.stdout, tight.stdout);
}

#[test]
fn determinant_table_reproduces_the_gue_value() {
    let gamma = KernelSpec::critical_gamma(1.0).to_string();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("det.csv");
    let out = p4cm(&["fredholm", "--nu", "1", "--gamma", &gamma, "--from", "-1", "--to", "1", "--step", "0.5", "--sigma", "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(&path);
    assert_eq!(header, ["x", "det", "logdet", "sigma"]);
    assert_eq!(rows.len(), 5);
    let at_zero = rows.iter().find(|r| r[0] == 0.0).unwrap();
    assert!((at_zero[1] - 0.5).abs() < 1e-8);
    assert!(rows.windows(2).all(|w| w[0][1] < w[1][1]));
    assert!(rows.iter().all(|r| r[3].is_finite()));
}

#[test]
fn asymptote_table_skips_singular_points() {
    let out = p4cm(&["asymptote", "--alpha", "0", "--kappa", "0.1", "--from", "-20", "--to", "5", "--step", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,q_asym,H_asym");
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn total_integral_report() {
    let out = p4cm(&["total-integral", "--alpha", "0.25", "--kappa", "0.1", "--tol", "1e-10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["regime"], "oscillatory");
    assert!(doc["report"]["rel_error"].as_f64().unwrap() < 1e-2);
}

#[test]
fn help_and_version_exit_cleanly() {
    assert!(p4cm(&["--help"]).status.success());
    assert!(p4cm(&["--version"]).status.success());
    assert!(p4cm(&["solve", "--help"]).status.success());
}
