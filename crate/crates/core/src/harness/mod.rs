//! Experiment harness: configuration, the source-training and adaptation
//! pipeline, CLI-facing commands, sweeps and report emission.

mod access;
mod commands;
mod config;
mod pipeline;
mod sweep;

pub use access::FileAccessLog;
pub use commands::{
    cmd_adapt, cmd_evaluate, cmd_fit_prior, cmd_sweep, cmd_synth, cmd_train_source, AdaptOutput,
};
pub use config::{
    BiasConfig, ExperimentConfig, Method, Paths, PriorKind, PriorSource, SourceTrainConfig,
    SweepAxes,
};
pub use pipeline::{adapt, adapt_full, build_prior, train_source, RunSettings, TargetSplits};
pub use sweep::{aggregate, run_sweep, Aggregate, SweepReport, SweepRow};
