use std::path::Path;
use std::process::Command;

use poschoice::cli::run;
use serde_json::Value;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poschoice"))
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["poschoice"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn tempdir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("poschoice-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn solve_step_reports_value_and_echo() {
    let (code, out, _) = call(&["solve", "--scenario", "step1d", "--x", "0.75"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tool"], "poschoice");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert!(v["config"].is_object());
    let entry = &v["results"][0];
    assert_eq!(entry["value"].as_f64().unwrap(), 0.5);
    assert_eq!(entry["argmax_set"][0][0].as_f64().unwrap(), 1.0);
}

#[test]
fn bad_alpha_is_a_usage_error() {
    let (code, _, err) = call(&["solve", "--scenario", "step1d", "--param", "alpha=0.5", "--x", "0.5"]);
    assert_eq!(code, 2);
    assert!(err.contains("alpha must exceed 1"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(call(&["solve", "--x", "0.5"]).0, 2);
    assert_eq!(call(&["frobnicate"]).0, 2);
    assert_eq!(call(&["solve", "--scenario", "nope", "--x", "0.5"]).0, 2);
    assert_eq!(call(&["solve", "--scenario", "step1d", "--param", "beta=2", "--x", "0.5"]).0, 2);
    assert_eq!(call(&["solve", "--scenario", "step1d", "--x", "7"]).0, 2);
    let (code, _, err) = call(&["reconstruct", "--scenario", "indicator2d", "--grid", "64"]);
    assert_eq!(code, 2);
    assert!(err.contains("one-dimensional"), "{err}");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(call(&["--help"]).0, 0);
    let (code, out, _) = call(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempdir("blocked");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("not-a-dir");
    std::fs::write(&file, "x").unwrap();
    let (code, _, _) = call(&["solve", "--scenario", "spike", "--x", "0.5", "--out", file.to_str().unwrap()]);
    assert_eq!(code, 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn analyze_output_is_deterministic() {
    let args = ["analyze", "--scenario", "step1d", "--grid", "128"];
    let (c1, a, _) = call(&args);
    let (c2, b, _) = call(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true), "{a}");
}

#[test]
fn binary_exit_codes() {
    let ok = exe().args(["scenario", "list"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let names: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(names["scenarios"].as_array().unwrap().len(), 5);
    let bad = exe().args(["solve", "--scenario", "ring"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn export_then_solve_from_file() {
    let dir = tempdir("export");
    let (code, text, _) = call(&["scenario", "export", "ring", "--out", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
    let path = dir.join("ring.toml");
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);

    let from_file = call(&["solve", "--problem-file", path.to_str().unwrap(), "--x", "1.5"]);
    let from_registry = call(&["solve", "--scenario", "ring", "--x", "1.5"]);
    assert_eq!(from_file.0, 0);
    let a: Value = serde_json::from_str(&from_file.1).unwrap();
    let b: Value = serde_json::from_str(&from_registry.1).unwrap();
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["results"][0]["value"].as_f64().unwrap(), 1.5);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn out_dir_files() {
    let dir = tempdir("files");
    let d = dir.to_str().unwrap();
    assert_eq!(call(&["analyze", "--scenario", "spike", "--grid", "128", "--out", d]).0, 0);
    assert_eq!(call(&["reconstruct", "--scenario", "step1d", "--grid", "256", "--out", d]).0, 0);
    for f in ["report.json", "plot.csv", "grid.csv", "grid.json", "reconstruct.json", "reconstruction.csv"] {
        assert!(Path::new(&dir).join(f).is_file(), "missing {f}");
    }
    let plot = std::fs::read_to_string(dir.join("plot.csv")).unwrap();
    assert!(plot.starts_with("x_1,V,dV_1,kink"), "{plot}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn csv_format_for_solve() {
    let (code, out, _) = call(&["solve", "--scenario", "indicator2d", "--x", "0.75,1.5", "--format", "csv"]);
    assert_eq!(code, 0);
    assert!(out.lines().count() >= 2, "{out}");
}
