use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{BiasThreshold, GeneratorSpec};
use crate::engine::PseudoSource;
use crate::error::{CraftError, Result};
use crate::prior::MixtureSpec;
use crate::regressor::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Craft,
    Tl,
    Naive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Craft => "craft",
            Method::Tl => "tl",
            Method::Naive => "naive",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = CraftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "craft" => Ok(Method::Craft),
            "tl" => Ok(Method::Tl),
            "naive" => Ok(Method::Naive),
            other => Err(CraftError::invalid(format!("unknown method {other:?}"))),
        }
    }
}

/// Where the label prior comes from. JSON: `"fit"`, `"true"` or
/// `{"file": "path"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorSource {
    /// Fit on the labeled target rows.
    Fit,
    /// Fit on every target training label before any bias injection.
    True,
    /// Load a serialized prior in original label units.
    File(PathBuf),
}

impl std::str::FromStr for PriorSource {
    type Err = CraftError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fit" => Ok(PriorSource::Fit),
            "true" => Ok(PriorSource::True),
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(PriorSource::File(PathBuf::from(p))),
                _ => Err(CraftError::invalid(format!(
                    "prior must be fit, true or file:PATH, got {s:?}"
                ))),
            },
        }
    }
}

/// Form of a fitted prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Mixture,
    Histogram { bins: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    pub threshold: BiasThreshold,
    pub keep_fraction_above: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig {
            threshold: BiasThreshold::Mean,
            keep_fraction_above: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub source_train: Option<PathBuf>,
    pub source_checkpoint: Option<PathBuf>,
    pub target_train: Option<PathBuf>,
    pub target_val: Option<PathBuf>,
    pub target_test: Option<PathBuf>,
    pub prior_out: Option<PathBuf>,
}

/// Network and optimizer settings for pretraining on the source set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SourceTrainConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SourceTrainConfig {
    fn default() -> Self {
        SourceTrainConfig {
            hidden: vec![32, 32],
            activation: Activation::Tanh,
            epochs: 60,
            lr: 3e-3,
            batch_size: 64,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Cartesian sweep axes. Empty axes fall back to the scalar setting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepAxes {
    pub methods: Vec<Method>,
    pub label_fractions: Vec<f64>,
    pub alphas: Vec<f64>,
    pub bin_counts: Vec<usize>,
    pub seeds: Vec<u64>,
}

/// A full experiment description; loaded from JSON with every field optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub paths: Paths,
    pub generator: Option<GeneratorSpec>,
    pub source: SourceTrainConfig,
    pub method: Method,
    pub alpha: f64,
    pub c: f64,
    pub bins: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub label_fraction: f64,
    pub n_strata: usize,
    pub pseudo_source: PseudoSource,
    pub prior: PriorSource,
    pub prior_kind: PriorKind,
    pub mixture: MixtureSpec,
    pub bias: Option<BiasConfig>,
    /// Keep the epoch with the lowest validation RMSE when a validation set
    /// exists; otherwise keep the final model.
    pub select_best: bool,
    pub sweep: SweepAxes,
    /// Worker threads for sweeps; 0 uses every core.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            paths: Paths::default(),
            generator: None,
            source: SourceTrainConfig::default(),
            method: Method::Craft,
            alpha: 0.1,
            c: 0.5,
            bins: 200,
            batch_size: 64,
            epochs: 40,
            lr: 1e-4,
            seed: 0,
            label_fraction: 1.0,
            n_strata: 10,
            pseudo_source: PseudoSource::PseudoForAll,
            prior: PriorSource::Fit,
            prior_kind: PriorKind::Mixture,
            mixture: MixtureSpec::default(),
            bias: None,
            select_best: true,
            sweep: SweepAxes::default(),
            threads: 0,
        }
    }
}

const PATH_ENV: [(&str, fn(&mut Paths) -> &mut Option<PathBuf>); 6] = [
    ("CRAFT_SOURCE_TRAIN", |p| &mut p.source_train),
    ("CRAFT_SOURCE_CHECKPOINT", |p| &mut p.source_checkpoint),
    ("CRAFT_TARGET_TRAIN", |p| &mut p.target_train),
    ("CRAFT_TARGET_VAL", |p| &mut p.target_val),
    ("CRAFT_TARGET_TEST", |p| &mut p.target_test),
    ("CRAFT_PRIOR_OUT", |p| &mut p.prior_out),
];

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CraftError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Path fields may be overridden by `CRAFT_*` variables; nothing else is.
    pub fn apply_env_overrides(&mut self, lookup: impl Fn(&str) -> Option<String>) {
        for (var, field) in PATH_ENV {
            if let Some(v) = lookup(var).filter(|v| !v.is_empty()) {
                *field(&mut self.paths) = Some(PathBuf::from(v));
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = std::iter::once(self.label_fraction).chain(self.sweep.label_fractions.iter().copied());
        for f in fractions {
            if !(f > 0.0 && f <= 1.0) {
                return Err(CraftError::invalid(format!("label fraction {f} outside (0, 1]")));
            }
        }
        for a in std::iter::once(self.alpha).chain(self.sweep.alphas.iter().copied()) {
            if !(a >= 0.0) {
                return Err(CraftError::invalid(format!("alpha {a} must be >= 0")));
            }
        }
        if !(self.c > 0.0) {
            return Err(CraftError::invalid("c must be > 0"));
        }
        if self.bins < 3 || self.sweep.bin_counts.iter().any(|&b| b < 3) {
            return Err(CraftError::invalid("bin counts must be >= 3"));
        }
        if self.batch_size == 0 || self.n_strata == 0 {
            return Err(CraftError::invalid("batch_size and n_strata must be >= 1"));
        }
        if let Some(b) = &self.bias {
            if !(0.0..=1.0).contains(&b.keep_fraction_above) {
                return Err(CraftError::invalid("bias keep_fraction_above outside [0, 1]"));
            }
        }
        self.mixture.validate()?;
        if let Some(g) = &self.generator {
            g.validate()?;
        }
        Ok(())
    }

    fn axis<T: Clone>(axis: &[T], scalar: T) -> Vec<T> {
        if axis.is_empty() {
            vec![scalar]
        } else {
            axis.to_vec()
        }
    }

    /// Every sweep cell, in a fixed order: method, fraction, alpha, bins, seed.
    pub fn cells(&self) -> Vec<super::RunSettings> {
        let mut out = Vec::new();
        for method in Self::axis(&self.sweep.methods, self.method) {
            for fraction in Self::axis(&self.sweep.label_fractions, self.label_fraction) {
                for alpha in Self::axis(&self.sweep.alphas, self.alpha) {
                    for bins in Self::axis(&self.sweep.bin_counts, self.bins) {
                        for seed in Self::axis(&self.sweep.seeds, self.seed) {
                            let mut s = super::RunSettings::from_config(self);
                            s.method = method;
                            s.label_fraction = fraction;
                            s.alpha = alpha;
                            s.bins = bins;
                            s.seed = seed;
                            out.push(s);
                        }
                    }
                }
            }
        }
        out
    }
}
