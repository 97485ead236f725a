use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{BiasConfig, ExperimentConfig, Method, PriorKind, PriorSource, SourceTrainConfig};
use crate::data::{
    apply_scaler, fit_scaler, inject_marginal_bias, stratified_label_mask, Dataset, ScalerParams,
};
use crate::engine::{
    fit_craft, fit_tl, naive_baseline, BinGrid, CraftConfig, FitOutcome, PseudoSource, RunReport,
    TrainConfig,
};
use crate::error::{CraftError, Result};
use crate::metrics::{evaluate, evaluate_predictions};
use crate::prior::{em_fit, fit_histogram_prior, LabelPrior, MixtureSpec};
use crate::regressor::{init_params, AdamConfig, Checkpoint, MlpSpec};

/// Target-domain data in original units.
#[derive(Debug, Clone)]
pub struct TargetSplits {
    pub train: Dataset,
    pub val: Option<Dataset>,
    pub test: Dataset,
}

/// Everything that determines one adaptation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub method: Method,
    pub alpha: f64,
    pub c: f64,
    pub bins: usize,
    pub label_fraction: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub n_strata: usize,
    pub pseudo_source: PseudoSource,
    pub prior: PriorSource,
    pub prior_kind: PriorKind,
    pub mixture: MixtureSpec,
    pub bias: Option<BiasConfig>,
    pub select_best: bool,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        RunSettings {
            method: cfg.method,
            alpha: cfg.alpha,
            c: cfg.c,
            bins: cfg.bins,
            label_fraction: cfg.label_fraction,
            seed: cfg.seed,
            batch_size: cfg.batch_size,
            epochs: cfg.epochs,
            lr: cfg.lr,
            n_strata: cfg.n_strata,
            pseudo_source: cfg.pseudo_source,
            prior: cfg.prior.clone(),
            prior_kind: cfg.prior_kind,
            mixture: cfg.mixture.clone(),
            bias: cfg.bias.clone(),
            select_best: cfg.select_best,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            adam: AdamConfig::with_lr(self.lr),
            select_best: self.select_best,
        }
    }
}

/// Pretrains a network on a fully labeled source set. A seeded share of the
/// rows is held out and the best held-out epoch is kept. The scaler is fit
/// on the training share.
pub fn train_source(source: &Dataset, cfg: &SourceTrainConfig) -> Result<(Checkpoint, FitOutcome)> {
    if !source.is_fully_labeled() {
        return Err(CraftError::invalid("source dataset must be fully labeled"));
    }
    if !(0.0..1.0).contains(&cfg.val_fraction) {
        return Err(CraftError::invalid("val_fraction must lie in [0, 1)"));
    }
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_val = (cfg.val_fraction * source.len() as f64).round() as usize;
    if n_val + 2 > source.len() {
        return Err(CraftError::invalid("source dataset too small for the validation split"));
    }
    let (val_idx, train_idx) = order.split_at(n_val);
    let train_raw = source.subset(train_idx);
    let scaler = fit_scaler(&train_raw)?;
    let train = apply_scaler(&train_raw, &scaler)?;
    let val = if n_val > 0 {
        Some(apply_scaler(&source.subset(val_idx), &scaler)?)
    } else {
        None
    };

    let mut layers = vec![source.dim()];
    layers.extend(&cfg.hidden);
    layers.push(1);
    let spec = MlpSpec::new(layers, cfg.activation)?;
    let init = init_params(&spec, cfg.seed)?;
    let tc = TrainConfig {
        batch_size: cfg.batch_size,
        epochs: cfg.epochs,
        seed: cfg.seed,
        adam: AdamConfig::with_lr(cfg.lr),
        select_best: true,
    };
    let outcome = fit_tl(init, &train, &tc, val.as_ref())?;
    Ok((Checkpoint::new(&outcome.params, Some(scaler)), outcome))
}

/// Scaled-unit prior plus the scaled labels the bin grid should span.
pub fn build_prior(
    settings: &RunSettings,
    masked: &Dataset,
    unbiased: &Dataset,
    file_prior: Option<&LabelPrior>,
    scaler: &ScalerParams,
) -> Result<(LabelPrior, Vec<f64>)> {
    let fit = |labels: &[f64]| -> Result<LabelPrior> {
        match settings.prior_kind {
            PriorKind::Mixture => Ok(LabelPrior::Mixture(em_fit(labels, &settings.mixture, settings.seed)?)),
            PriorKind::Histogram { bins } => fit_histogram_prior(labels, bins),
        }
    };
    let labeled = masked.labeled_labels();
    match &settings.prior {
        PriorSource::Fit => Ok((fit(&labeled)?, labeled)),
        PriorSource::True => {
            let all = unbiased.labels().to_vec();
            Ok((fit(&all)?, all))
        }
        PriorSource::File(_) => {
            let raw = file_prior.ok_or_else(|| CraftError::invalid("prior file was not loaded"))?;
            let a = scaler.label_scale();
            let b = scaler.scale_label(0.0);
            Ok((raw.affine(a, b)?, labeled))
        }
    }
}

/// Runs one adaptation cell: bias injection, label masking, prior and grid
/// construction, training and test evaluation in original label units.
pub fn adapt(
    checkpoint: &Checkpoint,
    target: &TargetSplits,
    settings: &RunSettings,
    file_prior: Option<&LabelPrior>,
) -> Result<RunReport> {
    adapt_full(checkpoint, target, settings, file_prior).map(|(r, _)| r)
}

/// [`adapt`] that also returns the adapted network (none for the naive method).
pub fn adapt_full(
    checkpoint: &Checkpoint,
    target: &TargetSplits,
    settings: &RunSettings,
    file_prior: Option<&LabelPrior>,
) -> Result<(RunReport, Option<Checkpoint>)> {
    checkpoint.require_input_dim(target.train.dim())?;
    let scaler = checkpoint
        .scaler
        .clone()
        .ok_or_else(|| CraftError::Checkpoint("checkpoint carries no scaler".into()))?;

    let pool = match &settings.bias {
        Some(b) => inject_marginal_bias(&target.train, b.threshold, b.keep_fraction_above, settings.seed)?,
        None => target.train.clone(),
    };
    let masked_raw = stratified_label_mask(&pool, settings.label_fraction, settings.n_strata, settings.seed)?;
    if masked_raw.n_labeled() == 0 {
        return Err(CraftError::invalid("label fraction leaves no labeled target rows"));
    }

    let mut report = RunReport {
        method: settings.method.as_str().into(),
        seed: settings.seed,
        alpha: settings.alpha,
        c: settings.c,
        bins: settings.bins,
        label_fraction: settings.label_fraction,
        rmse: 0.0,
        pbcor: None,
        epochs: Vec::new(),
        pseudo_label_hist: Vec::new(),
        best_epoch: 0,
    };

    if settings.method == Method::Naive {
        let naive = naive_baseline(&masked_raw.labeled_labels())?;
        let m = evaluate_predictions(&naive.predict(target.test.len()), target.test.labels())?;
        report.rmse = m.rmse;
        report.pbcor = m.pbcor;
        return Ok((report, None));
    }

    let masked = apply_scaler(&masked_raw, &scaler)?;
    let val = target.val.as_ref().map(|v| apply_scaler(v, &scaler)).transpose()?;
    let source = checkpoint.params();
    let train = settings.train_config();
    let outcome = match settings.method {
        Method::Tl => fit_tl(source, &masked, &train, val.as_ref())?,
        _ => {
            let unbiased = apply_scaler(&target.train, &scaler)?;
            let (prior, span) = build_prior(settings, &masked, &unbiased, file_prior, &scaler)?;
            let config = CraftConfig {
                alpha: settings.alpha,
                c: settings.c,
                grid: grid_for(&span, settings.bins)?,
                prior,
                pseudo_source: settings.pseudo_source,
                train,
            };
            fit_craft(source, &masked, &config, val.as_ref())?
        }
    };
    let m = evaluate(&outcome.params, &target.test, &scaler)?;
    report.rmse = m.rmse;
    report.pbcor = m.pbcor;
    report.epochs = RunReport::epochs_from(&outcome);
    report.pseudo_label_hist = outcome.pseudo_label_hist;
    report.best_epoch = outcome.best_epoch;
    Ok((report, Some(Checkpoint::new(&outcome.params, Some(scaler)))))
}

fn grid_for(labels: &[f64], bins: usize) -> Result<BinGrid> {
    let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < hi {
        BinGrid::from_labels(labels, bins)
    } else {
        BinGrid::from_range(lo - 1.0, lo + 1.0, bins)
    }
}
