//! The adaptation algorithm: candidate-label grid, batch-normalized joint
//! scores, pseudo-label selection, the combined loss and its gradient, and
//! the training loops for CRAFT and the baselines.

mod bins;
mod loss;
mod report;
mod scores;
mod train;

pub use bins::BinGrid;
pub use loss::{craft_loss_and_grad, loss_from_predictions, LossBreakdown, LossInput};
pub use report::{EpochReport, RunReport};
pub use scores::{
    joint_log_scores, joint_log_scores_with, select_pseudo_label_indices, select_pseudo_labels,
};
pub use train::{
    fit_craft, fit_tl, naive_baseline, CraftConfig, EpochStats, FitOutcome, NaivePredictor,
    Objective, PseudoSource, TrainConfig, Trainer,
};
