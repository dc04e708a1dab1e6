use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rgmwm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rgmwm")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn estimate(report: &str, label: &str) -> f64 {
    let line = report.lines().find(|l| l.starts_with(&format!("{label},"))).expect("parameter row");
    line.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn fit_recovers_fixture() {
    let out = rgmwm(&["fit", "--input", &fixture("ar1_n1000_seed1.csv"), "--model", "ar1(rho=?,v2=?)"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rho = estimate(&text, "ar1.rho");
    assert!((0.85..=0.95).contains(&rho), "rho = {rho}");
    assert!(text.contains("parameter,estimate,ci_lo,ci_hi"));
}

#[test]
fn report_to_file_lists_flags() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "fit.txt");
    let out = rgmwm(&[
        "fit",
        "--input",
        &fixture("ar1_spikes.csv"),
        "--model",
        "ar1(rho=?,v2=?)",
        "--robust",
        "--output",
        s(&report),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("# flagged: 10"), "{text}");
}

#[test]
fn missing_input_is_an_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "never.txt");
    let out = rgmwm(&["fit", "--input", "/nonexistent/x.csv", "--model", "ar1(rho=?,v2=?)", "--output", s(&report)]);
    assert_ne!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
    assert!(!report.exists());
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(rgmwm(&["fit"]).status.code(), Some(1));
    assert_eq!(rgmwm(&["nonsense"]).status.code(), Some(1));
    let out = rgmwm(&["simulate", "--model", "ar1(rho=0.5,v2=1)", "--n", "100", "--output", "/tmp/never.csv"]);
    assert_eq!(out.status.code(), Some(1), "seed is required");
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"));
    for p in [&a, &b] {
        let out = rgmwm(&["simulate", "--model", "ar1(rho=0.9,v2=1)", "--n", "1000", "--seed", "1", "--output", s(p)]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(x, y);
    assert_eq!(x, std::fs::read(fixture("ar1_n1000_seed1.csv")).unwrap());

    let field = path(dir.path(), "f.csv");
    let out = rgmwm(&[
        "simulate",
        "--model",
        "exp(phi=2,s2=1)",
        "--rows",
        "8",
        "--cols",
        "5",
        "--seed",
        "3",
        "--output",
        s(&field),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&field).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().all(|l| l.split(',').count() == 5));
}

#[test]
fn zero_contamination_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = path(dir.path(), "c.csv");
    let input = fixture("ar1_n1000_seed1.csv");
    let out = rgmwm(&[
        "contaminate",
        "--input",
        &input,
        "--kind",
        "isolated",
        "--epsilon",
        "0",
        "--sigma2",
        "9",
        "--seed",
        "4",
        "--output",
        s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read(&out_path).unwrap(), std::fs::read(&input).unwrap());
    let sidecar = std::fs::read_to_string(dir.path().join("c.csv.indices.csv")).unwrap();
    assert_eq!(sidecar.trim(), "index");

    let out = rgmwm(&[
        "contaminate",
        "--input",
        &input,
        "--kind",
        "isolated",
        "--epsilon",
        "0.02",
        "--sigma2",
        "9",
        "--seed",
        "4",
        "--output",
        s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let sidecar = std::fs::read_to_string(dir.path().join("c.csv.indices.csv")).unwrap();
    assert_eq!(sidecar.lines().count(), 21);
}

#[test]
fn wv_columns() {
    let input = fixture("ar1_n1000_seed1.csv");
    let plain = String::from_utf8(rgmwm(&["wv", "--input", &input]).stdout).unwrap();
    assert_eq!(plain.lines().count(), 10);
    assert!(plain.lines().all(|l| l.split(',').count() == 7));
    let with = String::from_utf8(rgmwm(&["wv", "--input", &input, "--model", "ar1(rho=?,v2=?)"]).stdout).unwrap();
    assert!(with.lines().all(|l| l.split(',').count() == 9));
}

#[test]
fn jtest_reports_p_value() {
    let input = fixture("ar1_n1000_seed1.csv");
    let out = rgmwm(&["jtest", "--input", &input, "--model", "ar1(rho=?,v2=?)", "--boot", "99", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let p: f64 = row[1].parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn benchmark_orders_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "b.csv");
    let out = rgmwm(&["benchmark", "--design", "ar1", "--replicates", "20", "--seed", "1", "--output", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("RGMWM") && table.contains("Conv. rate"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rmse = |est: &str| -> f64 {
        let row =
            text.lines().find(|l| l.split(',').nth(3) == Some(est) && l.split(',').nth(4) == Some("ar1.rho")).unwrap();
        row.split(',').nth(6).unwrap().parse().unwrap()
    };
    assert!(rmse("RGMWM") < rmse("GMWM"));
}
