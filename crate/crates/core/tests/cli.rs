use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hessianlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("HESSIANLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn report(out: &Path, command: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{command}.json"))).unwrap()).unwrap()
}

#[test]
fn barriers_reports_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["barriers"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "barriers");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["command"], "barriers");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("barriers-identities.csv")).unwrap();
    assert!(csv.starts_with("quantity,closed_form,minors,eigenvalues,agree"), "{csv}");
    let text = r.to_string();
    assert!(text.contains("0.36"), "{text}");
}

#[test]
fn sharp_example_passes_the_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("sharp_example.json");
    let o = run(&["audit-flatset", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(dir.path(), "audit-flatset")["status"], "pass");
    assert!(dir.path().join("audit-flatset-samples.csv").is_file());
}

#[test]
fn flat_quadratic_is_certified_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("x3_squared.json");
    let o = run(&["certify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "certify");
    assert_eq!(r["status"], "fail");
    assert!(r.to_string().contains("violated"));
    assert!(dir.path().join("certify-attempts.csv").is_file());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("sharp_example.json");
    let args = ["audit-flatset", "--config", cfg.to_str().unwrap()];
    run(&args, dir.path());
    let first = std::fs::read(dir.path().join("audit-flatset.json")).unwrap();
    let first_csv = std::fs::read(dir.path().join("audit-flatset-samples.csv")).unwrap();
    run(&args, dir.path());
    assert_eq!(first, std::fs::read(dir.path().join("audit-flatset.json")).unwrap());
    assert_eq!(first_csv, std::fs::read(dir.path().join("audit-flatset-samples.csv")).unwrap());
}

#[test]
fn overrides_change_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    run(&["barriers"], dir.path());
    let a = report(dir.path(), "barriers")["config_hash"].clone();
    run(&["barriers", "--h", "0.05"], dir.path());
    let r = report(dir.path(), "barriers");
    assert_ne!(a, r["config_hash"]);
    assert_eq!(r["config"]["audit"]["h"], 0.05);
}

#[test]
fn malformed_config_exits_one_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"n\": 3,\n  \"resolution\": 16,\n  \"domain\": { \"kind\": \"sphere\" }\n}\n").unwrap();
    let o = run(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.json:4:"), "{err}");

    let o = run(&["solve", "--k", "5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("k = 5"));
}

#[test]
fn solve_writes_a_readable_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--n", "2", "--res", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path(), "solve");
    assert_eq!(r["status"], "complete");
    let grid = std::fs::File::open(dir.path().join("solve.hgf")).unwrap();
    let u = hessianlab::grid::GridFunction::read_binary(grid).unwrap();
    assert_eq!(u.dim(), 2);
    assert_eq!(u.grid().cells, 16);
    // radial solution |x|^2 / 4 of det = 1 in the plane, reproduced exactly
    let alpha = hessianlab::cli::radial_coefficient(2, 2);
    let err = u.domain_nodes().map(|i| (u.value(i) - 0.5 * alpha * u.point(i).iter().map(|v| v * v).sum::<f64>()).abs());
    assert!(err.fold(0.0, f64::max) < 1e-9);
    assert!(dir.path().join("solve-history.csv").is_file());
}
