use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn craft(args: &[&str], dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_craft"));
    cmd.args(args).current_dir(dir);
    for (key, _) in std::env::vars().filter(|(k, _)| k.starts_with("CRAFT_")) {
        cmd.env_remove(key);
    }
    cmd.output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

fn write_config(dir: &Path) {
    let spec = json!({
        "scenario": "cli", "d": 3, "n_source": 400, "n_target_train": 200,
        "n_target_val": 50, "n_target_test": 100,
        "shift_mean": [0.5, 0.5, 0.5], "shift_scale": [1.2, 1.2, 1.2],
        "noise_std": 0.1, "seed": 4
    });
    fs::write(dir.join("spec.json"), spec.to_string()).unwrap();
    let cfg = json!({
        "paths": {
            "source_train": "data/source.csv",
            "source_checkpoint": "src/checkpoint.json",
            "target_train": "data/target_train.csv",
            "target_val": "data/target_val.csv",
            "target_test": "data/target_test.csv"
        },
        "source": { "epochs": 5 },
        "epochs": 2,
        "label_fraction": 0.2,
        "sweep": { "methods": ["craft", "tl"], "seeds": [0, 1] }
    });
    fs::write(dir.join("config.json"), cfg.to_string()).unwrap();
}

#[test]
fn end_to_end_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_config(dir);

    let synth = stdout_json(&craft(&["synth", "--spec", "spec.json", "--out", "data"], dir));
    assert_eq!(synth["files"].as_array().unwrap().len(), 5);

    let trained = stdout_json(&craft(&["train-source", "--config", "config.json", "--out", "src"], dir));
    assert!(trained["checkpoint"].as_str().unwrap().ends_with("checkpoint.json"));

    let eval = stdout_json(&craft(&["evaluate", "--config", "config.json"], dir));
    assert!(eval["rmse"].as_f64().unwrap() > 0.0);

    let adapted = stdout_json(&craft(
        &["adapt", "--config", "config.json", "--out", "run", "--method", "craft", "--alpha", "0.2", "--bins", "50"],
        dir,
    ));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["alpha"], 0.2);
    assert_eq!(report["bins"], 50);
    assert_eq!(report["rmse"], adapted["rmse"]);
    let read: Vec<String> = serde_json::from_value(adapted["files_read"].clone()).unwrap();
    assert!(read.iter().all(|p| !p.contains("source.csv")), "{read:?}");

    let prior = stdout_json(&craft(&["fit-prior", "--config", "config.json", "--out", "prior"], dir));
    assert!(prior["fitted"].is_object());
    assert!(dir.join("prior/density.csv").exists());

    let with_prior = craft(
        &["adapt", "--config", "config.json", "--out", "run2", "--prior", "file:prior/prior.json"],
        dir,
    );
    stdout_json(&with_prior);

    let sweep = stdout_json(&craft(&["sweep", "--config", "config.json", "--out", "sweep"], dir));
    assert_eq!(sweep["cells"], 4);
    assert_eq!(sweep["failed"], 0);
    let lines = fs::read_to_string(dir.join("sweep/sweep.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 6);
}

#[test]
fn usage_errors_exit_two_with_json() {
    let tmp = tempfile::tempdir().unwrap();
    let o = craft(&["adapt", "--alpha", "lots"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["kind"], "usage");

    let o = craft(&["bogus"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one_with_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let o = craft(&["adapt", "--config", "missing.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");

    fs::write(tmp.path().join("bad.json"), r#"{"alpha": -1}"#).unwrap();
    let o = craft(&["adapt", "--config", "bad.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "invalid_argument");
}

#[test]
fn help_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = craft(&["--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("adapt"));
}
