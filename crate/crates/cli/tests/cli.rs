//! The `verisynth` binary driven as a subprocess: output formats, exit codes
//! and run-directory artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn verisynth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_verisynth")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rank_prints_rankings_as_json() {
    let out = verisynth(&["rank", "--matrix", &fixture("matrix.json")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["strategy"], "initial");
    assert_eq!(v["solution_ranking"], serde_json::json!([0, 1, 2]));
    assert_eq!(v["test_ranking"], serde_json::json!([0, 1]));
    assert_eq!(v["zero_variance"], false);
}

#[test]
fn constant_test_scores_are_zero_variance() {
    let out = verisynth(&["rank", "--matrix", &fixture("matrix.json"), "--strategy", &fixture("flat_strategy.json")]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["zero_variance"], true);
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"problem_id": "p", "cells": 3}"#).unwrap();
    assert_eq!(code(&verisynth(&["rank", "--matrix", path(&bad)])), 2);
    assert_eq!(code(&verisynth(&["rank", "--matrix", path(&dir.path().join("missing.json"))])), 2);
    assert_eq!(code(&verisynth(&["rank", "--matrix", &fixture("matrix.json"), "--strategy", "bogus"])), 2);
    assert_eq!(code(&verisynth(&["rank", "--frobnicate"])), 2);
}

#[test]
fn non_finite_scores_exit_3() {
    let out = verisynth(&["rank", "--matrix", &fixture("matrix.json"), "--strategy", &fixture("overflow_strategy.json")]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
}

#[test]
fn unreachable_endpoint_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"endpoint": {"url": "http://127.0.0.1:9/v1", "model": "none", "timeout_secs": 2}}"#,
    )
    .unwrap();
    let out = verisynth(&[
        "--config",
        path(&config),
        "--run-dir",
        path(dir.path()),
        "synth",
        "--problems-source",
        "endpoint",
        "--problems",
        "2",
        "--m",
        "2",
        "--n",
        "2",
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_on_a_directory_without_manifests_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&verisynth(&["report", path(dir.path())])), 2);
}

#[test]
fn evolve_writes_one_history_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let run = path(dir.path());
    let out = verisynth(&["--run-dir", run, "evolve", "--instances", "20", "--iterations", "3", "--offspring", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 3);
    let manifest: Value = serde_json::from_slice(&std::fs::read(dir.path().join("manifest-evolve.json")).unwrap()).unwrap();
    assert_eq!(manifest["counts"]["iterations"], 3);
    assert_eq!(manifest["counts"]["evaluations"], 1 + 3 * 4 * 2);
    let best = std::fs::read_to_string(dir.path().join("best_strategy.json")).unwrap();
    verisynth::Strategy::from_json(&best).unwrap();

    assert_eq!(code(&verisynth(&["report", run])), 0);
    let copied = std::fs::read_to_string(dir.path().join("report-history.csv")).unwrap();
    assert_eq!(copied, history);
}

#[test]
fn report_has_one_retention_row_per_size() {
    let dir = tempfile::tempdir().unwrap();
    let run = path(dir.path());
    for (m, n) in [("4", "4"), ("2", "2"), ("4", "2")] {
        let out = verisynth(&[
            "--run-dir",
            run,
            "synth",
            "--problems-source",
            "sim",
            "--problems",
            "12",
            "--m",
            m,
            "--n",
            n,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(code(&verisynth(&["report", run])), 0);
    let csv = std::fs::read_to_string(dir.path().join("report-retention.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    let sizes: Vec<(u32, u32)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert_eq!(sizes, [(2, 2), (4, 2), (4, 4)]);
    let executions: Vec<u64> = rows.iter().map(|r| r.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(executions, [12 * 4, 12 * 8, 12 * 16]);
}

#[test]
fn sim_sweeps_every_strategy_and_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = verisynth(&[
        "--run-dir",
        path(dir.path()),
        "sim",
        "--instances",
        "30",
        "--mn",
        "4,8",
        "--strategy",
        "initial",
        "--strategy",
        "discriminative",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(csv.starts_with("strategy,m,n,instances,k,"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"sim": {"instances": 10, "rng_seed": 5}, "eval": {"k": 2}}"#).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", path(&config), "--run-dir", path(dir.path())];
        args.extend_from_slice(extra);
        args.push("eval");
        let out = verisynth(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<Value>(&std::fs::read(dir.path().join("manifest-eval.json")).unwrap()).unwrap()
    };
    let from_file = run(&[]);
    assert_eq!(from_file["rng_seed"], 5);
    assert_eq!(from_file["counts"]["instances"], 10);
    assert_eq!(from_file["counts"]["executions"], 10 * 4 * 2);
    let flagged = run(&["--rng-seed", "9"]);
    assert_eq!(flagged["rng_seed"], 9);
    assert_ne!(flagged["config_digest"], from_file["config_digest"]);
    // Worker count does not enter the digest.
    let threads = run(&["--parallelism", "3"]);
    assert_eq!(threads["config_digest"], from_file["config_digest"]);
}

#[test]
fn unknown_config_sections_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"simulation": {}}"#).unwrap();
    assert_eq!(code(&verisynth(&["--config", path(&config), "rank", "--matrix", &fixture("matrix.json")])), 2);
}
