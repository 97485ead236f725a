//! Label marginals `p(y)`: uniform, histogram, and a mixture of Gaussians and
//! exponentials fit by expectation-maximization.

mod em;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{CraftError, Result};
use crate::numeric;

pub use em::{em_fit, em_fit_traced, EmTrace, MixtureSpec};

/// Mixture of `k1` Gaussians and `k2` exponentials over `y + offset`.
///
/// Exponential components put zero mass below `y = -offset`; the offset is
/// chosen at fit time so the shifted training data is strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    /// Gaussian weights first, then exponential weights.
    pub weights: Vec<f64>,
    /// `(mean, variance)` per Gaussian component, in shifted coordinates.
    pub gaussians: Vec<(f64, f64)>,
    /// Rate per exponential component.
    pub exponentials: Vec<f64>,
    pub offset: f64,
}

impl MixtureParams {
    pub fn n_components(&self) -> usize {
        self.gaussians.len() + self.exponentials.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.n_components() || self.weights.is_empty() {
            return Err(CraftError::Shape(format!(
                "{} weights for {} components",
                self.weights.len(),
                self.n_components()
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(CraftError::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CraftError::invalid(format!("mixture weights sum to {total}")));
        }
        if self.gaussians.iter().any(|&(m, v)| !m.is_finite() || !(v > 0.0)) {
            return Err(CraftError::invalid("gaussian variances must be positive"));
        }
        if self.exponentials.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(CraftError::invalid("exponential rates must be positive"));
        }
        if !self.offset.is_finite() {
            return Err(CraftError::invalid("mixture offset must be finite"));
        }
        Ok(())
    }

    /// Per-component `log β_z + log p(x | z)` at a shifted coordinate `x`.
    pub(crate) fn component_log_terms(&self, x: f64, out: &mut Vec<f64>) {
        out.clear();
        for (z, &(mu, var)) in self.gaussians.iter().enumerate() {
            out.push(self.weights[z].ln() + gaussian_log_pdf(x, mu, var));
        }
        let k1 = self.gaussians.len();
        for (z, &rate) in self.exponentials.iter().enumerate() {
            out.push(self.weights[k1 + z].ln() + exponential_log_pdf(x, rate));
        }
    }
}

pub(crate) fn gaussian_log_pdf(x: f64, mu: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mu) * (x - mu) / (2.0 * var)
}

pub(crate) fn exponential_log_pdf(x: f64, rate: f64) -> f64 {
    if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        rate.ln() - rate * x
    }
}

/// `log Σ_z β_z p(y + offset | z)`; `-inf` where the density vanishes.
pub fn mixture_log_density(params: &MixtureParams, y: f64) -> f64 {
    let mut terms = Vec::with_capacity(params.n_components());
    params.component_log_terms(y + params.offset, &mut terms);
    numeric::log_sum_exp(&terms)
}

/// A label marginal used to steer pseudo-label selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LabelPrior {
    Uniform { lo: f64, hi: f64 },
    Histogram { edges: Vec<f64>, probs: Vec<f64> },
    Mixture(MixtureParams),
}

impl LabelPrior {
    pub fn validate(&self) -> Result<()> {
        match self {
            LabelPrior::Uniform { lo, hi } => {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(CraftError::invalid(format!("empty uniform range [{lo}, {hi}]")));
                }
            }
            LabelPrior::Histogram { edges, probs } => {
                if probs.is_empty() || edges.len() != probs.len() + 1 {
                    return Err(CraftError::Shape(format!(
                        "{} edges for {} histogram bins",
                        edges.len(),
                        probs.len()
                    )));
                }
                if edges.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(CraftError::invalid("histogram edges must increase"));
                }
                if probs.iter().any(|&p| !(p >= 0.0)) {
                    return Err(CraftError::invalid("histogram probabilities must be >= 0"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(CraftError::invalid(format!(
                        "histogram probabilities sum to {total}"
                    )));
                }
            }
            LabelPrior::Mixture(m) => m.validate()?,
        }
        Ok(())
    }

    pub fn log_density(&self, y: f64) -> f64 {
        prior_log_density(self, y)
    }

    /// The prior of `a * y + b` (`a > 0`) when `y` follows `self`.
    pub fn affine(&self, a: f64, b: f64) -> Result<LabelPrior> {
        if !(a > 0.0 && a.is_finite()) || !b.is_finite() {
            return Err(CraftError::invalid(format!("affine map needs a > 0, got {a}")));
        }
        Ok(match self {
            LabelPrior::Uniform { lo, hi } => LabelPrior::Uniform {
                lo: a * lo + b,
                hi: a * hi + b,
            },
            LabelPrior::Histogram { edges, probs } => LabelPrior::Histogram {
                edges: edges.iter().map(|e| a * e + b).collect(),
                probs: probs.clone(),
            },
            // shifted coordinate x = y + offset maps to a * x = y' + (a * offset - b)
            LabelPrior::Mixture(m) => LabelPrior::Mixture(MixtureParams {
                weights: m.weights.clone(),
                gaussians: m.gaussians.iter().map(|&(mu, v)| (a * mu, a * a * v)).collect(),
                exponentials: m.exponentials.iter().map(|&l| l / a).collect(),
                offset: a * m.offset - b,
            }),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let prior: LabelPrior = serde_json::from_str(text)?;
        prior.validate()?;
        Ok(prior)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("prior serializes")
    }
}

pub fn prior_log_density(prior: &LabelPrior, y: f64) -> f64 {
    match prior {
        LabelPrior::Uniform { lo, hi } => {
            if y >= *lo && y <= *hi {
                -(hi - lo).ln()
            } else {
                f64::NEG_INFINITY
            }
        }
        LabelPrior::Histogram { edges, probs } => {
            let last = edges.len() - 1;
            if !(y >= edges[0] && y <= edges[last]) {
                return f64::NEG_INFINITY;
            }
            // half-open bins [e_b, e_{b+1}); the last bin is closed
            let b = edges[1..last].partition_point(|&e| e <= y);
            (probs[b] / (edges[b + 1] - edges[b])).ln()
        }
        LabelPrior::Mixture(m) => mixture_log_density(m, y),
    }
}

/// Equal-width histogram over `[min, max]` with empirical frequencies. When
/// every label is identical the result is one unit-width bin centered on the
/// value.
pub fn fit_histogram_prior(labels: &[f64], n_bins: usize) -> Result<LabelPrior> {
    if n_bins == 0 {
        return Err(CraftError::invalid("histogram needs at least one bin"));
    }
    if labels.is_empty() || labels.iter().any(|y| !y.is_finite()) {
        return Err(CraftError::invalid("histogram needs finite, nonempty labels"));
    }
    let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(LabelPrior::Histogram {
            edges: vec![lo - 0.5, lo + 0.5],
            probs: vec![1.0],
        });
    }
    let width = (hi - lo) / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|k| lo + k as f64 * width).collect();
    edges[n_bins] = hi;
    let mut counts = vec![0usize; n_bins];
    for &y in labels {
        let b = (((y - lo) / width).floor() as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let n = labels.len() as f64;
    Ok(LabelPrior::Histogram {
        edges,
        probs: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}
