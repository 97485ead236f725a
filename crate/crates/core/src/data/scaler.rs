use serde::{Deserialize, Serialize};

use super::{Dataset, Matrix};
use crate::error::{CraftError, Result};
use crate::numeric;

/// Z-scores features and maps labels affinely so `label_lo -> -1` and
/// `label_hi -> 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub label_lo: f64,
    pub label_hi: f64,
}

impl ScalerParams {
    pub fn scale_label(&self, y: f64) -> f64 {
        2.0 * (y - self.label_lo) / (self.label_hi - self.label_lo) - 1.0
    }

    pub fn unscale_label(&self, y: f64) -> f64 {
        (y + 1.0) * 0.5 * (self.label_hi - self.label_lo) + self.label_lo
    }

    /// Scaled-unit length of a label-unit span.
    pub fn label_scale(&self) -> f64 {
        2.0 / (self.label_hi - self.label_lo)
    }

    pub fn dim(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn scale_features(&self, x: &Matrix) -> Result<Matrix> {
        self.check_dim(x.cols())?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.feature_mean[j]) / self.feature_std[j];
            }
        }
        Ok(out)
    }

    pub fn unscale_features(&self, x: &Matrix) -> Result<Matrix> {
        self.check_dim(x.cols())?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.feature_std[j] + self.feature_mean[j];
            }
        }
        Ok(out)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(CraftError::Shape(format!(
                "scaler fit on {} features, data has {d}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Feature statistics use every row; the label range uses labeled rows only.
pub fn fit_scaler(train: &Dataset) -> Result<ScalerParams> {
    let x = train.features();
    let mut feature_mean = Vec::with_capacity(x.cols());
    let mut feature_std = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let col: Vec<f64> = x.column(j).collect();
        let m = numeric::mean(&col);
        let s = numeric::variance(&col).sqrt();
        if s <= 1e-12 * m.abs().max(1.0) {
            return Err(CraftError::ZeroVariance(j));
        }
        feature_mean.push(m);
        feature_std.push(s);
    }
    let labels = train.labeled_labels();
    if labels.is_empty() {
        return Err(CraftError::invalid("scaler needs at least one labeled row"));
    }
    let lo = labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo >= hi {
        return Err(CraftError::Degenerate(format!(
            "label range is empty (lo = hi = {lo})"
        )));
    }
    Ok(ScalerParams {
        feature_mean,
        feature_std,
        label_lo: lo,
        label_hi: hi,
    })
}

pub fn apply_scaler(ds: &Dataset, params: &ScalerParams) -> Result<Dataset> {
    let features = params.scale_features(ds.features())?;
    let labels = ds.labels().iter().map(|&y| params.scale_label(y)).collect();
    Ok(Dataset::new(features, labels, ds.labeled_mask().to_vec())?.with_meta(Some(params.clone())))
}

pub fn invert_scaler(ds: &Dataset, params: &ScalerParams) -> Result<Dataset> {
    let features = params.unscale_features(ds.features())?;
    let labels = ds.labels().iter().map(|&y| params.unscale_label(y)).collect();
    Dataset::new(features, labels, ds.labeled_mask().to_vec())
}
