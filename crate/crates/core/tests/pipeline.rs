use craft_core::data::{
    apply_scaler, fit_scaler, generate_synthetic, load_csv, write_csv, Dataset, GeneratorSpec, Matrix,
};
use craft_core::engine::{fit_tl, TrainConfig};
use craft_core::harness::{
    adapt, adapt_full, train_source, ExperimentConfig, Method, RunSettings, SourceTrainConfig, TargetSplits,
};
use craft_core::metrics::{evaluate, predict, rmse};
use craft_core::regressor::{AdamConfig, Checkpoint};

fn small_spec(seed: u64) -> GeneratorSpec {
    let mut spec = GeneratorSpec::default_scenario(seed);
    spec.n_source = 800;
    spec.n_target_train = 400;
    spec.n_target_val = 100;
    spec.n_target_test = 300;
    spec
}

fn quick_source() -> SourceTrainConfig {
    SourceTrainConfig {
        epochs: 20,
        ..SourceTrainConfig::default()
    }
}

fn splits(seed: u64) -> (Checkpoint, TargetSplits) {
    let s = generate_synthetic(&small_spec(seed)).unwrap();
    let (ckpt, _) = train_source(&s.source, &quick_source()).unwrap();
    (
        ckpt,
        TargetSplits {
            train: s.target_train,
            val: Some(s.target_val),
            test: s.target_test,
        },
    )
}

fn settings(method: Method, alpha: f64) -> RunSettings {
    let mut cfg = ExperimentConfig::default();
    cfg.method = method;
    cfg.alpha = alpha;
    cfg.epochs = 5;
    cfg.label_fraction = 0.2;
    RunSettings::from_config(&cfg)
}

#[test]
fn csv_file_round_trip_is_exact() {
    let s = generate_synthetic(&small_spec(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_csv(&s.target_train, &path).unwrap();
    let back = load_csv(&path).unwrap();
    assert_eq!(back.features(), s.target_train.features());
    assert_eq!(back.labels(), s.target_train.labels());
    assert_eq!(back.labeled_mask(), s.target_train.labeled_mask());
}

#[test]
fn shift_degrades_the_source_model() {
    let s = generate_synthetic(&GeneratorSpec::default_scenario(0)).unwrap();
    let (ckpt, _) = train_source(&s.source, &SourceTrainConfig::default()).unwrap();
    let scaler = ckpt.scaler.as_ref().unwrap();
    let n = s.source.len();
    let held: Vec<usize> = (n - 500..n).collect();
    let on_source = evaluate(&ckpt.params(), &s.source.subset(&held), scaler).unwrap();
    let on_target = evaluate(&ckpt.params(), &s.target_test, scaler).unwrap();
    assert!(on_target.rmse > on_source.rmse, "{on_target:?} vs {on_source:?}");
}

#[test]
fn source_training_fits_and_is_deterministic() {
    let s = generate_synthetic(&small_spec(2)).unwrap();
    let (a, outcome) = train_source(&s.source, &quick_source()).unwrap();
    let (b, _) = train_source(&s.source, &quick_source()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
    let sd = {
        let y = s.source.labels();
        let m = y.iter().sum::<f64>() / y.len() as f64;
        (y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64).sqrt()
    };
    let last = outcome.epochs.iter().filter_map(|e| e.val_rmse).fold(f64::INFINITY, f64::min);
    // validation rmse is in scaled units; scaled labels have spread ~ sd * scale
    let scale = a.scaler.as_ref().unwrap().label_scale();
    assert!(last < 0.5 * sd * scale, "val rmse {last}, scaled sd {}", sd * scale);
}

#[test]
fn tiny_regression_problem_reaches_low_error() {
    let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![-1.0 + 2.0 * i as f64 / 199.0]).collect();
    let labels: Vec<f64> = rows.iter().map(|r| 0.5 * r[0] - 0.2).collect();
    let ds = Dataset::labeled(Matrix::from_rows(&rows).unwrap(), labels).unwrap();
    let cfg = SourceTrainConfig {
        hidden: vec![8],
        epochs: 300,
        lr: 1e-2,
        batch_size: 32,
        val_fraction: 0.2,
        ..SourceTrainConfig::default()
    };
    let (ckpt, _) = train_source(&ds, &cfg).unwrap();
    let pred = predict(&ckpt.params(), &ds, ckpt.scaler.as_ref().unwrap()).unwrap();
    assert!(rmse(&pred, ds.labels()).unwrap() < 1e-2);
}

#[test]
fn zero_alpha_adaptation_equals_fine_tuning() {
    let (ckpt, target) = splits(3);
    let tl = adapt(&ckpt, &target, &settings(Method::Tl, 0.1), None).unwrap();
    let craft = adapt(&ckpt, &target, &settings(Method::Craft, 0.0), None).unwrap();
    assert_eq!(tl.rmse, craft.rmse);
    assert_eq!(tl.pbcor, craft.pbcor);
    assert_eq!(tl.best_epoch, craft.best_epoch);
}

#[test]
fn adapted_checkpoint_reproduces_reported_metrics() {
    let (ckpt, target) = splits(4);
    let (report, adapted) = adapt_full(&ckpt, &target, &settings(Method::Craft, 0.1), None).unwrap();
    let adapted = Checkpoint::from_json(&adapted.unwrap().to_json()).unwrap();
    let m = evaluate(&adapted.params(), &target.test, adapted.scaler.as_ref().unwrap()).unwrap();
    assert_eq!(m.rmse, report.rmse);
    assert_eq!(m.pbcor, report.pbcor);
    let (_, none) = adapt_full(&ckpt, &target, &settings(Method::Naive, 0.1), None).unwrap();
    assert!(none.is_none());
}

#[test]
fn batched_predictions_match_whole_set() {
    let (ckpt, target) = splits(5);
    let scaler = ckpt.scaler.as_ref().unwrap();
    let whole = predict(&ckpt.params(), &target.test, scaler).unwrap();
    let mut pieces = Vec::new();
    let idx: Vec<usize> = (0..target.test.len()).collect();
    for chunk in idx.chunks(37) {
        pieces.extend(predict(&ckpt.params(), &target.test.subset(chunk), scaler).unwrap());
    }
    assert_eq!(whole, pieces);
}

#[test]
fn fine_tuning_without_validation_runs_every_epoch() {
    let (ckpt, target) = splits(6);
    let scaled = apply_scaler(&target.train, ckpt.scaler.as_ref().unwrap()).unwrap();
    let train = TrainConfig {
        batch_size: 32,
        epochs: 4,
        seed: 0,
        adam: AdamConfig::with_lr(1e-3),
        select_best: true,
    };
    let out = fit_tl(ckpt.params(), &scaled, &train, None).unwrap();
    assert_eq!(out.best_epoch, 4);
    assert_eq!(out.epochs.len(), 4);
    assert_eq!(out.params, out.final_params);
    // a fresh scaler on the target differs from the carried source scaler
    assert_ne!(&fit_scaler(&target.train).unwrap(), ckpt.scaler.as_ref().unwrap());
}
