use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn erl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erl")).args(args).output().expect("binary runs")
}

fn erl_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_erl")).args(args).env("ERL_THREADS", threads).output().expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn list_prints_catalog() {
    let o = erl(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 6);
    assert!(text.starts_with("cantor"));
}

#[test]
fn list_json_parses() {
    let o = erl(&["list", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert!(entries.len() >= 6);
    assert!(entries.iter().all(|e| e["description"].is_string()));
}

#[test]
fn unknown_flag_exits_one() {
    assert_eq!(erl(&["list", "--colour"]).status.code(), Some(1));
    assert_eq!(erl(&["cantor", "--colour"]).status.code(), Some(1));
    assert_eq!(erl(&["nonsense"]).status.code(), Some(1));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"seed\": 3,\n  \"n_max\" 4\n}\n").unwrap();
    let o = erl(&["cantor", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("column"), "{err}");
    assert!(!dir.path().join("results.csv").exists());
}

#[test]
fn unknown_config_field_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"seed": 3, "horizon": 10}"#).unwrap();
    let o = erl(&["cantor", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("horizon"));
}

#[test]
fn custom_needs_system_and_family() {
    assert_eq!(erl(&["custom"]).status.code(), Some(1));
}

#[test]
fn cantor_limit_is_one_third() {
    let dir = tempfile::tempdir().unwrap();
    let o = erl(&["cantor", "--n-max", "10", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let summary = read_json(&dir.path().join("summary.json"));
    let limit = summary["values"]["localized_limit"].as_f64().unwrap();
    assert!((limit - 1.0 / 3.0).abs() < 0.02, "{limit}");
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["config"]["n_max"], 10);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 9);
}

#[test]
fn dichotomy_point_zero_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let o = erl(&["dichotomy", "--word", "0", "--n-max", "12", "--out", path_str(dir.path()), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["passed"], true);
    let limit = summary["values"]["localized_limit"].as_f64().unwrap();
    assert!((limit - 0.5).abs() < 0.03, "{limit}");
}

#[test]
fn failed_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    std::fs::write(&cfg, r#"{"tolerances": {"localized": 1e-9}}"#).unwrap();
    let o = erl(&["cantor", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(read_json(&dir.path().join("summary.json"))["passed"], false);
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(erl(&["audit", "--n-max", "8", "--out", path_str(a.path())]).status.code(), Some(0));
    let manifest = a.path().join("manifest.json");
    let o = erl(&["audit", "--config", path_str(&manifest), "--out", path_str(b.path())]);
    assert_eq!(o.status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("results.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn catmap_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cat.json");
    std::fs::write(
        &cfg,
        r#"{"segment": {"p1": [0.13, 0.29], "slope": "1/2", "length": 0.3},
            "scheme": {"u": "log_n", "n": [50]}, "t_max": 300, "samples": 30000, "seed": 5}"#,
    )
    .unwrap();
    let one = dir.path().join("one");
    let three = dir.path().join("three");
    let o1 = erl_with_threads(&["catmap", "--config", path_str(&cfg), "--out", path_str(&one)], "1");
    let o3 = erl_with_threads(&["catmap", "--config", path_str(&cfg), "--out", path_str(&three)], "3");
    assert_eq!(o1.status.code(), Some(0), "{}", String::from_utf8_lossy(&o1.stdout));
    assert_eq!(o3.status.code(), Some(0));
    let read = |d: &Path| std::fs::read(d.join("results.csv")).unwrap();
    assert_eq!(read(&one), read(&three));
}

#[test]
fn bad_thread_count_exits_one() {
    let o = erl_with_threads(&["cantor", "--n-max", "4"], "zero");
    assert_eq!(o.status.code(), Some(1));
}
