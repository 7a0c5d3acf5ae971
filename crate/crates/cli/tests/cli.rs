use std::path::Path;
use std::process::{Command, Output};

fn lcvx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcvx")).args(args).output().unwrap()
}

fn scenario(dir: &Path, args: &[&str]) -> String {
    let mut all = vec!["scenario"];
    all.extend_from_slice(args);
    let out = lcvx(&all);
    assert!(out.status.success());
    let path = dir.join("spec.json");
    std::fs::write(&path, &out.stdout).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn default_rendezvous_solves_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let spec = scenario(dir.path(), &[]);
    assert_eq!(lcvx(&["check", &spec]).status.code(), Some(0));
    let out_dir = dir.path().join("out");
    let out = lcvx(&["solve", &spec, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 801);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["lp_status"], "Optimal");
}

#[test]
fn short_horizon_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = scenario(dir.path(), &["--x0=-1000,5000,300,0,0,0", "--tf", "10", "--n-steps", "20"]);
    let out_dir = dir.path().join("out");
    let out = lcvx(&["solve", &spec, "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("report.json").exists());
}

#[test]
fn malformed_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"A\": 3}").unwrap();
    assert_eq!(lcvx(&["solve", bad.to_str().unwrap()]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(lcvx(&["check", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn invalid_set_fails_check() {
    let dir = tempfile::tempdir().unwrap();
    let spec = scenario(dir.path(), &[]);
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    v["input_set"]["W"] = serde_json::json!([[0.9, 0.9, 0.0]]);
    std::fs::write(&spec, v.to_string()).unwrap();
    assert_eq!(lcvx(&["check", &spec]).status.code(), Some(2));
}
