use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use craft_core::data::GeneratorSpec;
use craft_core::harness::{
    cmd_adapt, cmd_evaluate, cmd_fit_prior, cmd_sweep, cmd_synth, cmd_train_source,
    ExperimentConfig, FileAccessLog, Method, PriorSource,
};
use craft_core::CraftError;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "craft", version, about = "Source-free semi-supervised regression adaptation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pretrain a network on the source set and write checkpoint.json.
    TrainSource(Common),
    /// Adapt a source checkpoint to the target set and write report.json.
    Adapt(Common),
    /// Score paths.source_checkpoint on the target test split.
    Evaluate(Common),
    /// Fit a label prior and write prior.json plus density.csv.
    FitPrior {
        #[command(flatten)]
        common: Common,
        /// Labels CSV; defaults to paths.target_train.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Generate a synthetic shift scenario as CSV files.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Generator spec JSON; defaults to the config's generator, then the
        /// built-in default scenario.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Run every cell of the configured sweep and write sweep.jsonl.
    Sweep(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long = "label-fraction")]
    label_fraction: Option<f64>,
    /// fit, true or file:PATH
    #[arg(long)]
    prior: Option<PriorSource>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply_env_overrides(|k| std::env::var(k).ok());
        if let Some(s) = self.seed {
            cfg.seed = s;
            cfg.source.seed = s;
        }
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(b) = self.bins {
            cfg.bins = b;
        }
        if let Some(f) = self.label_fraction {
            cfg.label_fraction = f;
        }
        if let Some(p) = &self.prior {
            cfg.prior = p.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<Value> {
    let log = FileAccessLog::new();
    match command {
        Command::TrainSource(c) => {
            let cfg = c.config()?;
            let path = cmd_train_source(&cfg, &c.out, &log)?;
            Ok(json!({ "checkpoint": path }))
        }
        Command::Adapt(c) => {
            let cfg = c.config()?;
            let out = cmd_adapt(&cfg, &c.out, &log)?;
            Ok(json!({
                "report": out.report_path,
                "rmse": out.report.rmse,
                "pbcor": out.report.pbcor,
                "files_read": out.files_read,
            }))
        }
        Command::Evaluate(c) => {
            let cfg = c.config()?;
            let m = cmd_evaluate(&cfg, &log)?;
            Ok(json!({ "rmse": m.rmse, "pbcor": m.pbcor }))
        }
        Command::FitPrior { common, labels } => {
            let cfg = common.config()?;
            let labels = labels
                .or_else(|| cfg.paths.target_train.clone())
                .context("fit-prior needs --labels or paths.target_train")?;
            let prior = cmd_fit_prior(&cfg, &labels, &common.out, &log)?;
            Ok(json!({ "prior": common.out.join("prior.json"), "fitted": prior }))
        }
        Command::Synth { common, spec } => {
            let cfg = common.config()?;
            let spec = match spec {
                Some(p) => load_spec(&p)?,
                None => cfg
                    .generator
                    .clone()
                    .unwrap_or_else(|| GeneratorSpec::default_scenario(cfg.seed)),
            };
            let files = cmd_synth(&spec, &common.out)?;
            Ok(json!({ "files": files }))
        }
        Command::Sweep(c) => {
            let cfg = c.config()?;
            let report = cmd_sweep(&cfg, &c.out, &log)?;
            let failed = report.rows.iter().filter(|r| r.error.is_some()).count();
            Ok(json!({
                "sweep": c.out.join("sweep.jsonl"),
                "cells": report.rows.len(),
                "failed": failed,
                "aggregates": report.aggregates,
            }))
        }
    }
}

fn load_spec(path: &Path) -> Result<GeneratorSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: GeneratorSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}

fn error_json(kind: &str, message: String) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim_end().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = e.downcast_ref::<CraftError>().map_or("error", CraftError::kind);
            eprintln!("{}", error_json(kind, format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
