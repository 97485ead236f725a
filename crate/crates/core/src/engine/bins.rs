use serde::{Deserialize, Serialize};

use crate::error::{CraftError, Result};
use crate::prior::LabelPrior;

/// `B` equal-width bins over `[lo, hi]`; the midpoints are the candidate
/// pseudo-labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinGrid {
    lo: f64,
    hi: f64,
    midpoints: Vec<f64>,
}

impl BinGrid {
    pub fn from_range(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CraftError::invalid(format!("bin grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if bins < 2 {
            return Err(CraftError::invalid("bin grid needs at least 2 bins"));
        }
        let w = (hi - lo) / bins as f64;
        let midpoints = (0..bins).map(|j| lo + (j as f64 + 0.5) * w).collect();
        Ok(BinGrid { lo, hi, midpoints })
    }

    /// Grid of width `w = (max - min) / (bins - 2)` spanning
    /// `[min - w, max + w]`: the observed range plus one bin of margin on
    /// each side.
    pub fn from_labels(labels: &[f64], bins: usize) -> Result<Self> {
        if bins < 3 {
            return Err(CraftError::invalid("a label-derived grid needs at least 3 bins"));
        }
        let min = labels.iter().copied().fold(f64::INFINITY, f64::min);
        let max = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(min < max) {
            return Err(CraftError::Degenerate("labels span an empty range".into()));
        }
        let w = (max - min) / (bins - 2) as f64;
        Self::from_range(min - w, max + w, bins)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.midpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.midpoints.is_empty()
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.len() as f64
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// Log prior density at every midpoint.
    pub fn log_prior(&self, prior: &LabelPrior) -> Vec<f64> {
        self.midpoints.iter().map(|&y| prior.log_density(y)).collect()
    }

    /// Index of the bin containing `y`, or `None` outside the grid.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        if !(y >= self.lo && y <= self.hi) {
            return None;
        }
        Some((((y - self.lo) / self.width()).floor() as usize).min(self.len() - 1))
    }
}
