use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn karmic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_karmic")).current_dir(dir).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn gen_then_train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout_json(&karmic(d, &["gen", "--model", "gaussian", "--mu", "2,0", "--kappa", "0.5", "--n", "1000", "--seed", "7", "--out", "d.csv"]));
    let clf = stdout_json(&karmic(d, &["train", "--metric", "fbeta:1", "--data", "d.csv", "--seed", "7"]));
    let delta = clf["delta"].as_f64().unwrap();
    assert!(delta > 0.0 && delta < 1.0);
    assert_eq!(clf["scorer"]["kind"], "logistic");

    stdout_json(&karmic(d, &["train", "--metric", "fbeta:1", "--data", "d.csv", "--seed", "7", "--out", "c.json"]));
    let report = stdout_json(&karmic(d, &["evaluate", "--classifier", "c.json", "--model-file", "d.csv.model.json"]));
    assert!(report["regret"].as_f64().unwrap() >= -1e-12);
    assert_eq!(report["mode"]["mode"], "closed-form");
}

#[test]
fn kernel_classifier_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout_json(&karmic(d, &["gen", "--model", "holder", "--n", "2000", "--seed", "3", "--out", "h.csv", "--binary", "h.bin"]));
    stdout_json(&karmic(d, &["train", "--metric", "am", "--data", "h.bin", "--estimator", "kernel:1", "--out", "k.json"]));
    assert!(d.join("k.json.train.csv").exists());
    let report = stdout_json(&karmic(
        d,
        &["evaluate", "--classifier", "k.json", "--model", "holder", "--mode", "quadrature:65536"],
    ));
    assert!(report["regret"].as_f64().unwrap() < 0.1);
}

#[test]
fn threshold_binary_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    stdout_json(&karmic(d, &["gen", "--model", "gaussian", "--mu", "2", "--kappa", "0.3", "--n", "5000", "--out", "g.csv"]));
    let scorer = r#"{"kind":"logistic","w":[2.0],"b":-0.8472978603872037}"#;
    let bin = stdout_json(&karmic(d, &["threshold", "--data", "g.csv", "--metric", "accuracy", "--scorer", scorer]));
    assert!((bin["delta_hat"].as_f64().unwrap() - 0.5).abs() <= bin["tolerance"].as_f64().unwrap());
    std::fs::write(d.join("s.json"), scorer).unwrap();
    let grid = stdout_json(&karmic(
        d,
        &["threshold", "--data", "g.csv", "--metric", "f1", "--scorer", "s.json", "--method", "grid", "--grid-step", "0.001"],
    ));
    assert!(grid["value"].as_f64().unwrap() > 0.5);
}

#[test]
fn discrete_oracle_lists_both_optima() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout_json(&karmic(dir.path(), &["oracle", "--discrete", "0.25:0.49,0.5:0.5,0.25:0.51", "--metric", "hmean"]));
    let set: Vec<Vec<i64>> = serde_json::from_value(out["argmax_set"].clone()).unwrap();
    assert!(set.contains(&vec![-1, 1, -1]));
    assert!(set.contains(&vec![1, -1, 1]));
}

#[test]
fn population_grid_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout_json(&karmic(
        dir.path(),
        &["oracle", "--metric", "am", "--model", "gaussian", "--mu", "2,0", "--kappa", "0.2", "--grid-step", "0.001"],
    ));
    assert!((out["delta_star"].as_f64().unwrap() - 0.2).abs() < 1e-6);
    assert!((out["grid_delta"].as_f64().unwrap() - 0.2).abs() <= 0.001);
}

#[test]
fn rate_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"
metric = "fbeta:1"
n_list = [256, 512, 1024]
seeds = 4
output = "out/rate"
[model]
kind = "gaussian"
mu = [2.0, 0.0]
kappa = 0.3
[estimator]
kind = "logistic"
"#;
    std::fs::write(d.join("rate_gaussian_f1.toml"), cfg).unwrap();
    let summary = stdout_json(&karmic(d, &["rate", "--config", "rate_gaussian_f1.toml", "--threads", "2"]));
    assert!(summary["slope"].is_number());
    assert_eq!(summary["schema"], 1);
    assert!(d.join("out/rate.csv").exists() && d.join("out/rate.json").exists() && d.join("out/rate.timing.csv").exists());
}

#[test]
fn errors_are_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = karmic(dir.path(), &["train", "--metric", "nope", "--data", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse-error");
    let out = karmic(dir.path(), &["train", "--metric", "f1", "--data", "missing.csv"]);
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "io-error");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(karmic(dir.path(), &["bogus"]).status.code(), Some(2));
    assert_eq!(karmic(dir.path(), &["gen", "--frobnicate"]).status.code(), Some(2));
}
