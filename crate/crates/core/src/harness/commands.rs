use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::access::FileAccessLog;
use super::config::{ExperimentConfig, PriorKind, PriorSource};
use super::pipeline::{adapt_full, train_source, RunSettings, TargetSplits};
use super::sweep::{run_sweep, SweepReport};
use crate::data::{generate_synthetic, write_csv, Dataset, GeneratorSpec};
use crate::engine::RunReport;
use crate::error::{CraftError, Result};
use crate::metrics::{evaluate, MetricPair};
use crate::prior::{em_fit, fit_histogram_prior, LabelPrior};
use crate::regressor::{save_checkpoint, Checkpoint};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const ADAPTED_FILE: &str = "adapted_checkpoint.json";
pub const REPORT_FILE: &str = "report.json";
pub const ACCESS_FILE: &str = "files_read.json";
pub const SWEEP_FILE: &str = "sweep.jsonl";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CraftError::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| CraftError::io(path, e))
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CraftError::invalid(format!("config is missing paths.{what}")))
}

fn synthetic(cfg: &ExperimentConfig) -> Result<Option<crate::data::SyntheticSplits>> {
    cfg.generator.as_ref().map(generate_synthetic).transpose()
}

/// Pretrains on `paths.source_train`, or on the generator's source split, and
/// writes `checkpoint.json` into `out`.
pub fn cmd_train_source(cfg: &ExperimentConfig, out: &Path, log: &FileAccessLog) -> Result<PathBuf> {
    let source = match (&cfg.paths.source_train, synthetic(cfg)?) {
        (Some(p), _) => log.load_csv(p)?,
        (None, Some(s)) => s.source,
        (None, None) => {
            return Err(CraftError::invalid("config needs paths.source_train or a generator"))
        }
    };
    let (ckpt, _) = train_source(&source, &cfg.source)?;
    create_dir(out)?;
    let path = out.join(CHECKPOINT_FILE);
    save_checkpoint(&ckpt, &path)?;
    Ok(path)
}

/// Target splits from `paths.target_*`, or the generator's target splits when
/// no target paths are set. Only target files are opened.
pub fn load_target(cfg: &ExperimentConfig, log: &FileAccessLog) -> Result<TargetSplits> {
    let p = &cfg.paths;
    if p.target_train.is_some() || p.target_test.is_some() {
        return Ok(TargetSplits {
            train: log.load_csv(require(&p.target_train, "target_train")?)?,
            val: p.target_val.as_deref().map(|v| log.load_csv(v)).transpose()?,
            test: log.load_csv(require(&p.target_test, "target_test")?)?,
        });
    }
    match synthetic(cfg)? {
        Some(s) => Ok(TargetSplits {
            train: s.target_train,
            val: Some(s.target_val),
            test: s.target_test,
        }),
        None => Err(CraftError::invalid("config needs target paths or a generator")),
    }
}

fn load_file_prior(cfg: &ExperimentConfig, log: &FileAccessLog) -> Result<Option<LabelPrior>> {
    match &cfg.prior {
        PriorSource::File(p) => Ok(Some(LabelPrior::from_json(&log.read_to_string(p)?)?)),
        _ => Ok(None),
    }
}

fn load_source_checkpoint(cfg: &ExperimentConfig, log: &FileAccessLog) -> Result<Checkpoint> {
    log.load_checkpoint(require(&cfg.paths.source_checkpoint, "source_checkpoint")?)
}

fn check_source_free(cfg: &ExperimentConfig, log: &FileAccessLog) -> Result<()> {
    if let Some(src) = &cfg.paths.source_train {
        if log.contains(src) {
            return Err(CraftError::invalid(format!(
                "adaptation opened the source dataset {}",
                src.display()
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AdaptOutput {
    pub report: RunReport,
    pub report_path: PathBuf,
    pub files_read: Vec<PathBuf>,
}

/// One adaptation run from a source checkpoint. Writes `report.json`,
/// `files_read.json` and the adapted checkpoint into `out`. Never opens `paths.source_train`.
pub fn cmd_adapt(cfg: &ExperimentConfig, out: &Path, log: &FileAccessLog) -> Result<AdaptOutput> {
    let ckpt = load_source_checkpoint(cfg, log)?;
    let target = load_target(cfg, log)?;
    let file_prior = load_file_prior(cfg, log)?;
    let (report, adapted) =
        adapt_full(&ckpt, &target, &RunSettings::from_config(cfg), file_prior.as_ref())?;
    check_source_free(cfg, log)?;
    create_dir(out)?;
    if let Some(a) = &adapted {
        save_checkpoint(a, out.join(ADAPTED_FILE))?;
    }
    let report_path = out.join(REPORT_FILE);
    write_json(&report_path, &report)?;
    let files_read = log.paths();
    write_json(&out.join(ACCESS_FILE), &files_read)?;
    Ok(AdaptOutput {
        report,
        report_path,
        files_read,
    })
}

/// Evaluates `paths.source_checkpoint` on the target test split.
pub fn cmd_evaluate(cfg: &ExperimentConfig, log: &FileAccessLog) -> Result<MetricPair> {
    let ckpt = load_source_checkpoint(cfg, log)?;
    let target = load_target(cfg, log)?;
    ckpt.require_input_dim(target.test.dim())?;
    let scaler = ckpt
        .scaler
        .as_ref()
        .ok_or_else(|| CraftError::Checkpoint("checkpoint carries no scaler".into()))?;
    evaluate(&ckpt.params(), &target.test, scaler)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SweepLine<'a> {
    Run(&'a super::SweepRow),
    Aggregate(&'a super::Aggregate),
}

fn append_line(file: &mut File, path: &Path, line: &SweepLine) -> Result<()> {
    let mut text = serde_json::to_string(line)?;
    text.push('\n');
    file.write_all(text.as_bytes())
        .and_then(|_| file.flush())
        .map_err(|e| CraftError::io(path, e))
}

/// Every cell of the sweep grid. Rows are appended to `sweep.jsonl` as cells
/// finish (in cell order); aggregate lines follow the last row.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, log: &FileAccessLog) -> Result<SweepReport> {
    let ckpt = load_source_checkpoint(cfg, log)?;
    let target = load_target(cfg, log)?;
    let file_prior = load_file_prior(cfg, log)?;
    check_source_free(cfg, log)?;
    create_dir(out)?;
    let path = out.join(SWEEP_FILE);
    let mut file = OpenOptions::new()
        .create(true)
        .write(true)
        .truncate(true)
        .open(&path)
        .map_err(|e| CraftError::io(&path, e))?;
    let cells = cfg.cells();
    let report = run_sweep(&ckpt, &target, &cells, file_prior.as_ref(), cfg.threads, |row| {
        append_line(&mut file, &path, &SweepLine::Run(row))
    })?;
    for a in &report.aggregates {
        append_line(&mut file, &path, &SweepLine::Aggregate(a))?;
    }
    Ok(report)
}

/// Fits a prior to the labeled rows of `labels_csv`, writing `prior.json` and
/// a `density.csv` curve over the label range padded by 10% per side.
pub fn cmd_fit_prior(
    cfg: &ExperimentConfig,
    labels_csv: &Path,
    out: &Path,
    log: &FileAccessLog,
) -> Result<LabelPrior> {
    let ds = log.load_csv(labels_csv)?;
    let labels = ds.labeled_labels();
    let prior = match cfg.prior_kind {
        PriorKind::Mixture => LabelPrior::Mixture(em_fit(&labels, &cfg.mixture, cfg.seed)?),
        PriorKind::Histogram { bins } => fit_histogram_prior(&labels, bins)?,
    };
    create_dir(out)?;
    let prior_path = out.join("prior.json");
    fs::write(&prior_path, prior.to_json() + "\n").map_err(|e| CraftError::io(&prior_path, e))?;

    let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (hi - lo).max(1.0);
    let n = 401;
    let mut csv = String::from("y,log_density\n");
    for k in 0..n {
        let y = (lo - pad) + (hi - lo + 2.0 * pad) * k as f64 / (n - 1) as f64;
        csv.push_str(&format!("{y},{}\n", prior.log_density(y)));
    }
    let curve = out.join("density.csv");
    fs::write(&curve, csv).map_err(|e| CraftError::io(&curve, e))?;
    Ok(prior)
}

/// Writes the four splits as CSV plus the generating spec as `spec.json`.
pub fn cmd_synth(spec: &GeneratorSpec, out: &Path) -> Result<Vec<PathBuf>> {
    let splits = generate_synthetic(spec)?;
    create_dir(out)?;
    let named: [(&str, &Dataset); 4] = [
        ("source.csv", &splits.source),
        ("target_train.csv", &splits.target_train),
        ("target_val.csv", &splits.target_val),
        ("target_test.csv", &splits.target_test),
    ];
    let mut written = Vec::new();
    for (name, ds) in named {
        let p = out.join(name);
        write_csv(ds, &p)?;
        written.push(p);
    }
    let p = out.join("spec.json");
    write_json(&p, spec)?;
    written.push(p);
    Ok(written)
}
