//! CRAFT: source-free, semi-supervised adaptation of pretrained regressors.
//!
//! A source model is fine-tuned on a partially labeled target set. Labeled rows
//! contribute a squared-error term; every row additionally contributes a
//! contradistinguisher term, computed against a pseudo-label chosen from a
//! discrete grid of candidate labels by maximizing a batch-normalized joint
//! score that includes a label prior `p(y)`.
//!
//! Module map:
//! - [`data`]: datasets, CSV ingestion, scaling, label masks, synthetic shift scenarios
//! - [`prior`]: label marginals, including a Gaussian/exponential mixture fit by EM
//! - [`regressor`]: dense network, backpropagation, Adam, gradient checks, checkpoints
//! - [`engine`]: bin grid, joint scores, pseudo-labels, the combined loss, training loops
//! - [`metrics`]: RMSE and percentage-bend correlation
//! - [`harness`]: experiment configuration, commands, sweeps and reports

pub mod data;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod numeric;
pub mod prior;
pub mod regressor;

pub use error::{CraftError, Result};
