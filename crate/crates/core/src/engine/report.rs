use serde::{Deserialize, Serialize};

use super::train::{EpochStats, FitOutcome};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub supervised: f64,
    pub unsup_quadratic: f64,
    pub unsup_contrastive: f64,
    pub wall_s: f64,
    pub pseudo_label_s: f64,
    pub step_s: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub val_rmse: Option<f64>,
}

impl From<&EpochStats> for EpochReport {
    fn from(e: &EpochStats) -> Self {
        EpochReport {
            supervised: e.loss.supervised,
            unsup_quadratic: e.loss.unsup_quadratic,
            unsup_contrastive: e.loss.unsup_contrastive,
            wall_s: e.wall_s,
            pseudo_label_s: e.pseudo_label_s,
            step_s: e.step_s,
            val_rmse: e.val_rmse,
        }
    }
}

/// Outcome of one adaptation run, serialized one per line in sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: String,
    pub seed: u64,
    pub alpha: f64,
    pub c: f64,
    pub bins: usize,
    pub label_fraction: f64,
    pub rmse: f64,
    pub pbcor: Option<f64>,
    pub epochs: Vec<EpochReport>,
    pub pseudo_label_hist: Vec<u64>,
    #[serde(default)]
    pub best_epoch: usize,
}

impl RunReport {
    pub fn epochs_from(outcome: &FitOutcome) -> Vec<EpochReport> {
        outcome.epochs.iter().map(EpochReport::from).collect()
    }

    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> RunReport {
        let mut r = self.clone();
        for e in &mut r.epochs {
            e.wall_s = 0.0;
            e.pseudo_label_s = 0.0;
            e.step_s = 0.0;
        }
        r
    }
}
