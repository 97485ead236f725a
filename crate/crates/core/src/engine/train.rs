use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bins::BinGrid;
use super::loss::{loss_from_predictions, LossBreakdown};
use super::scores::select_pseudo_label_indices;
use crate::data::Dataset;
use crate::error::{CraftError, Result};
use crate::metrics;
use crate::prior::LabelPrior;
use crate::regressor::{backward_cached, forward_batch, forward_cached, AdamConfig, AdamState, RegressorParams};

/// Optimizer and batching settings shared by every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Return the parameters with the lowest validation RMSE (the starting
    /// point included) instead of the final ones, when validation data is given.
    pub select_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 30,
            seed: 0,
            adam: AdamConfig::default(),
            select_best: true,
        }
    }
}

/// Which target each row uses inside the unsupervised term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PseudoSource {
    #[default]
    PseudoForAll,
    TrueLabelsForLabeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CraftConfig {
    pub alpha: f64,
    pub c: f64,
    pub grid: BinGrid,
    pub prior: LabelPrior,
    pub pseudo_source: PseudoSource,
    pub train: TrainConfig,
}

impl CraftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(CraftError::invalid(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(CraftError::invalid(format!("c must be > 0, got {}", self.c)));
        }
        self.prior.validate()
    }
}

/// Training objective for a [`Trainer`].
#[derive(Debug, Clone)]
pub enum Objective {
    Supervised,
    Craft {
        alpha: f64,
        c: f64,
        midpoints: Vec<f64>,
        log_prior: Vec<f64>,
        pseudo_source: PseudoSource,
    },
}

impl Objective {
    pub fn craft(config: &CraftConfig) -> Result<Self> {
        config.validate()?;
        Ok(Objective::Craft {
            alpha: config.alpha,
            c: config.c,
            midpoints: config.grid.midpoints().to_vec(),
            log_prior: config.grid.log_prior(&config.prior),
            pseudo_source: config.pseudo_source,
        })
    }
}

/// Per-epoch sums and timings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: LossBreakdown,
    pub wall_s: f64,
    /// Time spent scoring bins and picking pseudo-labels.
    pub pseudo_label_s: f64,
    /// Time spent on loss, backward pass and optimizer update.
    pub step_s: f64,
    pub steps: usize,
    pub val_rmse: Option<f64>,
}

/// Epoch-by-epoch optimizer over one dataset.
///
/// Each epoch shuffles the labeled and unlabeled rows separately and deals
/// them into `ceil(N / batch_size)` batches so every batch holds both kinds in
/// proportion. Batches with no loss term (no labeled rows and no unsupervised
/// weight) are skipped.
pub struct Trainer<'a> {
    params: RegressorParams,
    adam: AdamState,
    data: &'a Dataset,
    objective: Objective,
    batch_size: usize,
    rng: ChaCha8Rng,
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
    pseudo_hist: Vec<u64>,
}

impl<'a> Trainer<'a> {
    pub fn new(
        params: RegressorParams,
        data: &'a Dataset,
        objective: Objective,
        config: &TrainConfig,
    ) -> Result<Self> {
        params.validate()?;
        if data.dim() != params.spec.input_dim() {
            return Err(CraftError::Shape(format!(
                "network expects {} features, data has {}",
                params.spec.input_dim(),
                data.dim()
            )));
        }
        if config.batch_size == 0 {
            return Err(CraftError::invalid("batch_size must be >= 1"));
        }
        let labeled = data.labeled_indices();
        if matches!(objective, Objective::Supervised) && labeled.is_empty() {
            return Err(CraftError::invalid("supervised training needs labeled rows"));
        }
        let bins = match &objective {
            Objective::Craft { midpoints, .. } => midpoints.len(),
            Objective::Supervised => 0,
        };
        Ok(Trainer {
            adam: AdamState::new(&params, config.adam),
            params,
            data,
            objective,
            batch_size: config.batch_size,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            labeled,
            unlabeled: data.unlabeled_indices(),
            pseudo_hist: vec![0; bins],
        })
    }

    pub fn params(&self) -> &RegressorParams {
        &self.params
    }

    pub fn into_params(self) -> RegressorParams {
        self.params
    }

    /// Pseudo-label counts per bin during the most recent epoch.
    pub fn pseudo_label_hist(&self) -> &[u64] {
        &self.pseudo_hist
    }

    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let start = Instant::now();
        let mut stats = EpochStats::default();
        self.labeled.shuffle(&mut self.rng);
        self.unlabeled.shuffle(&mut self.rng);
        self.pseudo_hist.iter_mut().for_each(|h| *h = 0);

        let n = self.data.len();
        let n_batches = n.div_ceil(self.batch_size);
        let (nl, nu) = (self.labeled.len(), self.unlabeled.len());
        let labels = self.data.labels();
        for k in 0..n_batches {
            let mut rows = self.labeled[k * nl / n_batches..(k + 1) * nl / n_batches].to_vec();
            let n_lab = rows.len();
            rows.extend_from_slice(&self.unlabeled[k * nu / n_batches..(k + 1) * nu / n_batches]);
            if rows.is_empty() {
                continue;
            }
            let alpha = match &self.objective {
                Objective::Supervised => 0.0,
                Objective::Craft { alpha, .. } => *alpha,
            };
            if n_lab == 0 && alpha == 0.0 {
                continue;
            }
            let x = self.data.features().select_rows(&rows);
            let targets: Vec<Option<f64>> = (0..rows.len())
                .map(|j| (j < n_lab).then(|| labels[rows[j]]))
                .collect();
            let cache = forward_cached(&self.params, &x)?;
            let predictions = cache.outputs();

            let (pseudo, c) = match &self.objective {
                Objective::Supervised => (vec![0.0; rows.len()], 1.0),
                Objective::Craft {
                    c,
                    midpoints,
                    log_prior,
                    pseudo_source,
                    ..
                } => {
                    let t = Instant::now();
                    let idx = select_pseudo_label_indices(predictions, midpoints, log_prior, *c);
                    stats.pseudo_label_s += t.elapsed().as_secs_f64();
                    let mut pseudo = Vec::with_capacity(rows.len());
                    for (j, &b) in idx.iter().enumerate() {
                        match (pseudo_source, targets[j]) {
                            (PseudoSource::TrueLabelsForLabeled, Some(y)) => pseudo.push(y),
                            _ => {
                                self.pseudo_hist[b] += 1;
                                pseudo.push(midpoints[b]);
                            }
                        }
                    }
                    (pseudo, *c)
                }
            };

            let t = Instant::now();
            let (loss, upstream) = loss_from_predictions(predictions, &targets, &pseudo, alpha, c)?;
            let grads = backward_cached(&self.params, &cache, &upstream)?;
            self.adam.step(&mut self.params, &grads)?;
            stats.step_s += t.elapsed().as_secs_f64();
            stats.loss.accumulate(&loss);
            stats.steps += 1;
        }
        stats.wall_s = start.elapsed().as_secs_f64();
        Ok(stats)
    }
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Selected parameters (best validation epoch, or final).
    pub params: RegressorParams,
    pub final_params: RegressorParams,
    pub epochs: Vec<EpochStats>,
    /// 0 means the starting parameters were kept.
    pub best_epoch: usize,
    pub pseudo_label_hist: Vec<u64>,
}

fn val_rmse(params: &RegressorParams, val: &Dataset) -> Result<f64> {
    let pred = forward_batch(params, val.features())?;
    let idx = val.labeled_indices();
    let p: Vec<f64> = idx.iter().map(|&i| pred[i]).collect();
    let t: Vec<f64> = idx.iter().map(|&i| val.labels()[i]).collect();
    metrics::rmse(&p, &t)
}

fn run(
    params: RegressorParams,
    data: &Dataset,
    objective: Objective,
    config: &TrainConfig,
    val: Option<&Dataset>,
) -> Result<FitOutcome> {
    let val = val.filter(|v| config.select_best && v.n_labeled() > 0);
    let mut best = match val {
        Some(v) => Some((val_rmse(&params, v)?, params.clone(), 0)),
        None => None,
    };
    let mut trainer = Trainer::new(params, data, objective, config)?;
    let mut epochs = Vec::with_capacity(config.epochs);
    for e in 1..=config.epochs {
        let mut stats = trainer.run_epoch()?;
        if let (Some(v), Some(b)) = (val, best.as_mut()) {
            let r = val_rmse(trainer.params(), v)?;
            stats.val_rmse = Some(r);
            if r < b.0 {
                *b = (r, trainer.params().clone(), e);
            }
        }
        epochs.push(stats);
    }
    let pseudo_label_hist = trainer.pseudo_label_hist().to_vec();
    let final_params = trainer.into_params();
    let (params, best_epoch) = match best {
        Some((_, p, e)) => (p, e),
        None => (final_params.clone(), config.epochs),
    };
    Ok(FitOutcome {
        params,
        final_params,
        epochs,
        best_epoch,
        pseudo_label_hist,
    })
}

/// Adapts `source` to the (scaled) target set with the combined objective.
/// With no labeled rows this is the purely unsupervised mode.
pub fn fit_craft(
    source: RegressorParams,
    target: &Dataset,
    config: &CraftConfig,
    val: Option<&Dataset>,
) -> Result<FitOutcome> {
    run(source, target, Objective::craft(config)?, &config.train, val)
}

/// Fine-tunes `source` on the labeled target rows only.
pub fn fit_tl(
    source: RegressorParams,
    target: &Dataset,
    config: &TrainConfig,
    val: Option<&Dataset>,
) -> Result<FitOutcome> {
    run(source, target, Objective::Supervised, config, val)
}

/// Constant predictor emitting the training-label mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaivePredictor {
    pub mean: f64,
}

impl NaivePredictor {
    pub fn predict(&self, n: usize) -> Vec<f64> {
        vec![self.mean; n]
    }
}

pub fn naive_baseline(train_labels: &[f64]) -> Result<NaivePredictor> {
    if train_labels.is_empty() {
        return Err(CraftError::invalid("naive baseline needs a labeled row"));
    }
    Ok(NaivePredictor {
        mean: crate::numeric::mean(train_labels),
    })
}
