use std::fs;
use std::path::{Path, PathBuf};

use craft_core::data::GeneratorSpec;
use craft_core::harness::{
    aggregate, cmd_adapt, cmd_fit_prior, cmd_sweep, cmd_synth, cmd_train_source, ExperimentConfig, FileAccessLog,
    Method, PriorSource, SweepRow,
};
use craft_core::prior::LabelPrior;
use serde_json::Value;

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
    cfg: ExperimentConfig,
}

fn workspace() -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let mut spec = GeneratorSpec::default_scenario(9);
    spec.n_source = 600;
    spec.n_target_train = 300;
    spec.n_target_val = 80;
    spec.n_target_test = 200;
    let data = root.join("data");
    cmd_synth(&spec, &data).unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.paths.source_train = Some(data.join("source.csv"));
    cfg.paths.source_checkpoint = Some(root.join("src/checkpoint.json"));
    cfg.paths.target_train = Some(data.join("target_train.csv"));
    cfg.paths.target_val = Some(data.join("target_val.csv"));
    cfg.paths.target_test = Some(data.join("target_test.csv"));
    cfg.source.epochs = 8;
    cfg.epochs = 3;
    cfg.label_fraction = 0.2;
    cmd_train_source(&cfg, &root.join("src"), &FileAccessLog::new()).unwrap();
    Workspace { _dir: dir, root, cfg }
}

fn read_lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn sweep_is_reproducible_and_aggregates_match_rows() {
    let mut ws = workspace();
    ws.cfg.sweep.methods = vec![Method::Craft, Method::Tl, Method::Naive];
    ws.cfg.sweep.seeds = vec![0, 1, 2];
    ws.cfg.threads = 2;
    let a = cmd_sweep(&ws.cfg, &ws.root.join("a"), &FileAccessLog::new()).unwrap();
    ws.cfg.threads = 1;
    let b = cmd_sweep(&ws.cfg, &ws.root.join("b"), &FileAccessLog::new()).unwrap();
    assert_eq!(a.rows.len(), 9);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.cell, y.cell);
        assert_eq!(
            x.report.as_ref().unwrap().without_timings(),
            y.report.as_ref().unwrap().without_timings()
        );
    }

    let lines = read_lines(&ws.root.join("a/sweep.jsonl"));
    let rows: Vec<SweepRow> = lines
        .iter()
        .filter(|v| v["kind"] == "run")
        .map(|v| serde_json::from_value(v.clone()).unwrap())
        .collect();
    let cells: Vec<usize> = rows.iter().map(|r| r.cell).collect();
    assert_eq!(cells, (0..9).collect::<Vec<_>>());
    let recomputed = aggregate(&rows);
    let written: Vec<&Value> = lines.iter().filter(|v| v["kind"] == "aggregate").collect();
    assert_eq!(written.len(), 3);
    for (agg, line) in recomputed.iter().zip(written) {
        assert_eq!(line["median_rmse"].as_f64(), agg.median_rmse);
        assert_eq!(line["n_runs"].as_u64(), Some(agg.n_runs as u64));
    }
    assert_eq!(recomputed, a.aggregates);
}

#[test]
fn adapt_report_has_expected_schema() {
    let ws = workspace();
    let out = cmd_adapt(&ws.cfg, &ws.root.join("run"), &FileAccessLog::new()).unwrap();
    let report: Value = serde_json::from_str(&fs::read_to_string(&out.report_path).unwrap()).unwrap();
    for key in [
        "method",
        "seed",
        "alpha",
        "c",
        "bins",
        "label_fraction",
        "rmse",
        "pbcor",
        "epochs",
        "pseudo_label_hist",
        "best_epoch",
    ] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let epoch = &report["epochs"][0];
    for key in ["supervised", "unsup_quadratic", "unsup_contrastive", "wall_s", "pseudo_label_s", "step_s"] {
        assert!(epoch.get(key).is_some(), "missing epochs[].{key}");
    }
    assert_eq!(report["pseudo_label_hist"].as_array().unwrap().len(), ws.cfg.bins);
    assert!(ws.root.join("run/adapted_checkpoint.json").exists());
    let read: Vec<PathBuf> =
        serde_json::from_str(&fs::read_to_string(ws.root.join("run/files_read.json")).unwrap()).unwrap();
    assert_eq!(read, out.files_read);
}

#[test]
fn fitted_prior_reloads_and_density_curve_matches() {
    let mut ws = workspace();
    let labels = ws.cfg.paths.target_train.clone().unwrap();
    let prior = cmd_fit_prior(&ws.cfg, &labels, &ws.root.join("prior"), &FileAccessLog::new()).unwrap();
    let reloaded = LabelPrior::from_json(&fs::read_to_string(ws.root.join("prior/prior.json")).unwrap()).unwrap();
    assert_eq!(prior, reloaded);

    let curve = fs::read_to_string(ws.root.join("prior/density.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("y,log_density"));
    let mut n = 0;
    for line in lines {
        let (y, d) = line.split_once(',').unwrap();
        let y: f64 = y.parse().unwrap();
        assert_eq!(d.parse::<f64>().unwrap(), reloaded.log_density(y));
        n += 1;
    }
    assert_eq!(n, 401);

    // the written prior drives an adaptation run through a file reference
    ws.cfg.prior = PriorSource::File(ws.root.join("prior/prior.json"));
    let log = FileAccessLog::new();
    cmd_adapt(&ws.cfg, &ws.root.join("with-file-prior"), &log).unwrap();
    assert!(log.contains(&ws.root.join("prior/prior.json")));
}

#[test]
fn adapt_refuses_a_missing_checkpoint() {
    let mut ws = workspace();
    ws.cfg.paths.source_checkpoint = Some(ws.root.join("nope.json"));
    let err = cmd_adapt(&ws.cfg, &ws.root.join("x"), &FileAccessLog::new()).unwrap_err();
    assert_eq!(err.kind(), "io");
}
