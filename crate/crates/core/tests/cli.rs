use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn coverlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coverlab")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coverlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn triangle() -> PathBuf {
    let path = scratch("tri.json");
    std::fs::write(&path, r#"{"n": 3, "edges": [{"v": [0, 1], "k": 1}, {"v": [0, 2], "k": 1}, {"v": [1, 2], "k": 1}]}"#)
        .unwrap();
    path
}

fn strip_clock(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v
}

#[test]
fn round_reports_ratio() {
    let tri = triangle();
    let out = coverlab(&["round", "--mode", "mssc", "--beta", "2", "--trials", "20000", "--seed", "1", "--instance", tri.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["subcommand"], "round");
    assert_eq!(v["seed"], 1);
    assert!(v["digest"].is_string());
    let ratio = v["result"]["ratio"].as_f64().unwrap();
    assert!((1.0..=4.0).contains(&ratio), "{ratio}");
}

#[test]
fn single_thread_runs_are_bitwise_reproducible() {
    let tri = triangle();
    let args = ["--threads", "1", "round", "--mode", "msvc", "--trials", "10000", "--seed", "9", "--instance", tri.to_str().unwrap()];
    let a = strip_clock(report(&coverlab(&args)));
    let b = strip_clock(report(&coverlab(&args)));
    assert_eq!(a, b);
}

#[test]
fn gen_then_solve() {
    let path = scratch("gen.json");
    let out = coverlab(&["gen", "--family", "random", "--n", "5", "--m", "4", "--seed", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let digest = report(&out)["digest"].clone();
    let out = coverlab(&["solve", "--instance", path.to_str().unwrap(), "--mode", "mssc"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["digest"], digest);
    assert!(v["result"]["objective"].as_f64().unwrap() > 0.0);
}

#[test]
fn tail_grid_report_exits_zero() {
    let out = coverlab(&["tail"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(&out);
    assert_eq!(v["result"]["passed"], true);
    assert!(v["result"]["grids"].as_array().unwrap().len() >= 9);
}

#[test]
fn usage_and_io_errors_exit_two() {
    assert_eq!(coverlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(coverlab(&["round", "--trials", "ten"]).status.code(), Some(2));
    assert_eq!(coverlab(&["solve", "--instance", "/no/such/file.json"]).status.code(), Some(2));
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "edges": [{"v": [0, 5], "k": 1}]}"#).unwrap();
    let out = coverlab(&["solve", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn csv_flattens_scalars() {
    let out = coverlab(&["--format", "csv", "gap", "--big-n", "2000", "--epsilon", "0.05", "--k", "2,3,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
}

#[test]
fn verify_exit_code_tracks_outcomes() {
    let out = coverlab(&["verify", "--quick", "--seed", "7"]);
    let v = report(&out);
    let outcomes = v["result"]["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 9);
    let all = outcomes.iter().all(|o| o["passed"] == true);
    assert_eq!(out.status.code(), Some(if all { 0 } else { 1 }));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).count(), 9);
    if !all {
        assert!(stderr.contains("verification failed: criterion"));
    }
}

#[test]
fn greedy_writes_certificate() {
    let tri = triangle();
    let cert = scratch("cert.txt");
    let out = coverlab(&["greedy", "--instance", tri.to_str().unwrap(), "--p", "2", "--certificate", cert.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["certificate_feasible"], true);
    assert!(std::fs::read_to_string(cert).unwrap().starts_with("p 2"));
}
