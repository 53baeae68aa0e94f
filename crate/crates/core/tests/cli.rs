use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use diffcarl::harness::Manifest;

const TINY: &str = r#"
[profiles]
eval_days = 1
[algorithms.diffcarl]
episodes = 2
steps_per_episode = 24
updates_per_episode = 1
batch_size = 8
eval_interval = 1
greedy_samples = 2
[run]
seeds = [0]
"#;

fn diffcarl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffcarl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path.display().to_string()
}

#[test]
fn missing_config_is_a_configuration_error() {
    let out = diffcarl(&["compare", "--config", "/nonexistent/experiment.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn unknown_subcommand_exits_two() {
    assert_eq!(diffcarl(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(diffcarl(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_algorithm_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffcarl(&[
        "evaluate",
        "--algo",
        "alphazero",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = diffcarl(&["synth", "--out", out_dir.to_str().unwrap()]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        runs.push((
            fs::read(out_dir.join("profile_0.csv")).unwrap(),
            fs::read(out_dir.join("profile_1.csv")).unwrap(),
        ));
    }
    assert_eq!(runs[0], runs[1]);
    assert_ne!(runs[0].0, runs[0].1);
}

#[test]
fn train_then_evaluate_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("out");
    let out = out_dir.to_str().unwrap();
    let train = diffcarl(&[
        "train", "--config", &cfg, "--algo", "diffcarl", "--out", out,
    ]);
    assert!(
        train.status.success(),
        "{}",
        String::from_utf8_lossy(&train.stderr)
    );
    assert!(out_dir.join("diffcarl_seed0.json").exists());
    assert!(out_dir.join("diffcarl_seed0_curve.csv").exists());

    let eval = diffcarl(&[
        "evaluate", "--config", &cfg, "--algo", "diffcarl", "--out", out,
    ]);
    assert!(
        eval.status.success(),
        "{}",
        String::from_utf8_lossy(&eval.stderr)
    );
    let csv = fs::read_to_string(out_dir.join("diffcarl_seed0_eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn evaluate_without_checkpoint_fails_at_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out = diffcarl(&[
        "evaluate",
        "--config",
        &cfg,
        "--algo",
        "dqn",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn risk_sweep_manifest_lists_every_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let out_dir = dir.path().join("sweep");
    let out = diffcarl(&[
        "sweep-risk",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: Manifest =
        toml::from_str(&fs::read_to_string(out_dir.join("manifest.toml")).unwrap()).unwrap();
    let names: Vec<&str> = manifest.cells.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "risk_lambda_-1",
            "risk_lambda_-0.1",
            "risk_lambda_0",
            "risk_lambda_0.1",
            "risk_lambda_1"
        ]
    );
    assert!(manifest.cells.iter().all(|c| c.status == "ok"));
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("distributions/risk_lambda_1.csv").exists());
}
