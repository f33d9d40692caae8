use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn leveling(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leveling"))
        .args(args)
        .current_dir(dir)
        .env_remove("LEVELING_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(o: Output) -> String {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(&o));
    stdout(&o)
}

/// IXOR train/test tables plus a short training config in `dir`.
fn ixor_setup(dir: &Path) {
    ok(leveling(
        dir,
        &["gen-ixor", "--rows", "1500", "--seed", "3", "--out", "ixor-train.csv", "--test-out", "ixor-test.csv"],
    ));
    std::fs::write(
        dir.join("ixor.json"),
        r#"{
  "task": "binary",
  "dataset": { "kind": "table", "path": "ixor-train.csv", "test_path": "ixor-test.csv" },
  "architecture": [3, 8, 4, 2],
  "lambda": 0.2,
  "lr": 0.005,
  "batch_size": 32,
  "iterations": 400,
  "eval_every": 200,
  "output": { "checkpoint": "out.json" }
}"#,
    )
    .unwrap();
}

#[test]
fn pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ixor_setup(d);

    let summary: Value = serde_json::from_str(&ok(leveling(d, &["train", "--config", "ixor.json"]))).unwrap();
    assert!(d.join("out.json").is_file());
    let history = std::fs::read_to_string(d.join("out.history.csv")).unwrap();
    assert!(history.starts_with("iteration,train_loss,metric,open_gates_1,open_gates_2\n"));
    assert_eq!(history.lines().count(), 3);

    let report: Value = serde_json::from_str(&ok(leveling(
        d,
        &["report", "--model", "out.json", "--data", "ixor-test.csv", "--out", "report.json"],
    )))
    .unwrap();
    let arch = report["architecture"].as_str().unwrap();
    assert!(arch.ends_with("-2") && arch.contains('*'), "{arch}");
    assert_eq!(arch, summary["architecture"]);
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    assert_eq!(report["metric"], summary["metric"]);
    // effective config embedded with defaults applied
    assert_eq!(report["config"]["lambda_warmup_iters"], 40);
    assert_eq!(report["config"]["metric"], "accuracy");
    let written: Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(written, report);

    // the embedded config finds the same test rows without --data
    let again: Value = serde_json::from_str(&ok(leveling(d, &["report", "--model", "out.json"]))).unwrap();
    assert_eq!(again, report);

    let pruned_arch = ok(leveling(d, &["prune", "--model", "out.json", "--out", "pruned.json"]));
    assert_eq!(pruned_arch.trim(), arch);
    let full: Value = serde_json::from_str(&ok(leveling(d, &["eval", "--model", "out.json", "--data", "ixor-test.csv"]))).unwrap();
    let small: Value =
        serde_json::from_str(&ok(leveling(d, &["eval", "--model", "pruned.json", "--data", "ixor-test.csv"]))).unwrap();
    assert_eq!(full["rows"], 300);
    assert_eq!(full["metric"]["kind"], "accuracy");
    assert!((full["metric"]["value"].as_f64().unwrap() - small["metric"]["value"].as_f64().unwrap()).abs() < 1e-12);

    ok(leveling(d, &["heatmap", "--model", "out.json", "--weights", "1", "--format", "csv", "--out", "w1.csv"]));
    let csv = std::fs::read_to_string(d.join("w1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
    assert!(csv.lines().all(|l| l.split(',').count() == 3));
    ok(leveling(d, &["heatmap", "--model", "out.json", "--weights", "head", "--out", "head.pgm"]));
    assert!(std::fs::read(d.join("head.pgm")).unwrap().starts_with(b"P5\n15 2\n255\n"));
}

#[test]
fn same_seed_gives_identical_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ixor_setup(d);
    for out in ["a.json", "b.json"] {
        ok(leveling(d, &["train", "--config", "ixor.json", "--seed", "7", "--out", out]));
    }
    let a = std::fs::read(d.join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(
        std::fs::read(d.join("a.history.csv")).unwrap(),
        std::fs::read(d.join("b.history.csv")).unwrap()
    );
    ok(leveling(d, &["train", "--config", "ixor.json", "--seed", "8", "--out", "c.json"]));
    assert_ne!(a, std::fs::read(d.join("c.json")).unwrap());
}

#[test]
fn missing_dataset_path_exits_2_naming_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("c.json"),
        r#"{"task":"binary","dataset":{"kind":"table","path":"nowhere/ixor.csv"},"architecture":[3,2]}"#,
    )
    .unwrap();
    let o = leveling(d, &["train", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere/ixor.csv"), "{}", stderr(&o));

    let o = leveling(d, &["eval", "--model", "absent.json", "--data", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.json"));
}

#[test]
fn usage_errors_exit_1_naming_the_offender() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = leveling(d, &["train", "--lamda", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--lamda"));

    let o = leveling(d, &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(d.join("c.json"), r#"{"task":"binary","dataset":{"kind":"ixor","rows":100,"seed":0}}"#).unwrap();
    let o = leveling(d, &["train", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("architecture"), "{}", stderr(&o));

    std::fs::write(
        d.join("c.json"),
        r#"{"task":"binary","dataset":{"kind":"ixor","rows":100,"seed":0},"architecture":[3,2],"batchsize":4}"#,
    )
    .unwrap();
    let o = leveling(d, &["train", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("batchsize"), "{}", stderr(&o));

    let o = leveling(d, &["train", "--config", "c.json", "--lambda=-1"]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(leveling(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.json"), "{\"task\": ").unwrap();
    assert_eq!(leveling(d, &["train", "--config", "c.json"]).status.code(), Some(2));
    std::fs::write(d.join("m.json"), "{\"version\": 1, \"kind\"").unwrap();
    assert_eq!(leveling(d, &["prune", "--model", "m.json", "--out", "p.json"]).status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("big.csv"), "a,label\n1,1e200\n2,-1e200\n3,1e200\n4,1\n5,2\n6,3\n").unwrap();
    std::fs::write(
        d.join("c.json"),
        r#"{"task":"regression","dataset":{"kind":"table","path":"big.csv"},"architecture":[1,2,1],"iterations":5}"#,
    )
    .unwrap();
    let o = leveling(d, &["train", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("iteration 1"));
}

#[test]
fn shipped_config_with_overrides_and_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let summary: Value = serde_json::from_str(&ok(leveling(
        d,
        &["train", "--config", "ixor", "--iterations", "200", "--out", "s.json"],
    )))
    .unwrap();
    assert!(summary["architecture"].as_str().unwrap().ends_with("-2"));
    let report: Value = serde_json::from_str(&ok(leveling(d, &["report", "--model", "s.json"]))).unwrap();
    assert_eq!(report["config"]["iterations"], 200);
    assert_eq!(report["config"]["lambda_warmup_iters"], 20);

    // relative dataset paths resolve against the data directory
    let data = d.join("data");
    std::fs::create_dir(&data).unwrap();
    ok(leveling(&data, &["gen-ixor", "--rows", "200", "--out", "t.csv"]));
    std::fs::write(
        d.join("c.json"),
        r#"{"task":"binary","dataset":{"kind":"table","path":"t.csv"},"architecture":[3,4,2],"iterations":20}"#,
    )
    .unwrap();
    assert_eq!(leveling(d, &["train", "--config", "c.json"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_leveling"))
        .args(["train", "--config", "c.json", "--out", "e.json"])
        .current_dir(d)
        .env("LEVELING_DATA_DIR", &data)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    ok(leveling(d, &["train", "--config", "c.json", "--data-dir", "data", "--out", "f.json"]));
    assert_eq!(std::fs::read(d.join("e.json")).unwrap(), std::fs::read(d.join("f.json")).unwrap());
}
