use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/p2_bump_1d.json")
}

fn base_config() -> Value {
    serde_json::from_slice(&std::fs::read(bundled()).unwrap()).unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orlicz-sharp")).args(args).output().unwrap()
}

fn run_config(dir: &Path, cfg: &Value, command: &str) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    let out = dir.join("out");
    run(&[command, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_config_runs_every_command() {
    let dir = tempfile::tempdir().unwrap();
    for command in ["check", "sweep", "norm-sweep", "probe"] {
        let o = run_config(dir.path(), &base_config(), command);
        assert_eq!(o.status.code(), Some(0), "{command}: {}", stderr(&o));
    }
    let out = dir.path().join("out");
    for file in [
        "p2_bump_1d.check.json",
        "p2_bump_1d.sweep.csv",
        "p2_bump_1d.norm-sweep.csv",
        "p2_bump_1d.remainder.csv",
        "p2_bump_1d.energy.csv",
        "p2_bump_1d.poincare.csv",
        "p2_bump_1d.sweep.manifest.json",
    ] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let manifest: Value =
        serde_json::from_slice(&std::fs::read(out.join("p2_bump_1d.sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_field_gives_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config();
    cfg["name"] = json!("zero");
    cfg["test_function"]["carrier"] = json!({ "kind": "zero" });
    cfg["grid"]["refinements"] = json!(1);
    let o = run_config(dir.path(), &cfg, "sweep");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut csv = csv::Reader::from_path(dir.path().join("out/zero.sweep.csv")).unwrap();
    let headers = csv.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (m, t) = (col("sharp_modular"), col("target"));
    let mut rows = 0;
    for rec in csv.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[m].parse::<f64>().unwrap(), 0.0);
        assert_eq!(rec[t].parse::<f64>().unwrap(), 0.0);
        rows += 1;
    }
    assert_eq!(rows, 2);
}

#[test]
fn under_resolved_ball_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config();
    cfg["grid"]["r_min_cells"] = json!(1.5);
    let o = run_config(dir.path(), &cfg, "sweep");
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("under-resolved ball"), "{}", stderr(&o));
}

#[test]
fn check_reports_doubling_constant() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(dir.path(), &base_config(), "check");
    assert_eq!(o.status.code(), Some(0));
    let report: Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/p2_bump_1d.check.json")).unwrap()).unwrap();
    let kappa = report["delta2"]["kappa_hat"].as_f64().unwrap();
    assert!((kappa - 4.0).abs() < 1e-12);
    assert_eq!(report["passed"], true);
}

#[test]
fn exponential_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config();
    cfg["phi"] = json!({ "family": "exponential" });
    let o = run_config(dir.path(), &cfg, "check");
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base_config();
    cfg["psi"]["epsilon0"] = json!("half");
    let o = run_config(dir.path(), &cfg, "sweep");
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("psi.epsilon0"), "{}", stderr(&o));

    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"name\": ").unwrap();
    assert_eq!(run(&["sweep", "--config", path.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn c0_command() {
    let o = run(&["c0", "--dim", "3", "--resolution", "0.0625"]);
    assert_eq!(o.status.code(), Some(0));
    let line = String::from_utf8(o.stdout).unwrap();
    assert!(line.contains("analytic=0.375"), "{line}");
    assert_ne!(run(&["c0", "--dim", "7"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(4));
}
