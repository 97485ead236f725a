//! Evaluation metrics: RMSE and the percentage-bend correlation.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ScalerParams};
use crate::error::{CraftError, Result};
use crate::numeric;
use crate::regressor::{forward_batch, RegressorParams};

pub const DEFAULT_BEND: f64 = 0.2;

/// RMSE in label units and the percentage-bend correlation; `pbcor` is
/// `None` when the predictions have no spread (e.g. a constant predictor).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub rmse: f64,
    pub pbcor: Option<f64>,
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(CraftError::Shape(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(CraftError::invalid("rmse of an empty set"));
    }
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Bent scores `A_i = clamp((v_i - θ̂) / ω, -1, 1)` of one variable.
fn bend_scores(v: &[f64], bend: f64) -> Result<Vec<f64>> {
    let n = v.len();
    let med = numeric::median(v);
    let mut w: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    w.sort_by(f64::total_cmp);
    let m = (((1.0 - bend) * n as f64 + 0.5).floor() as usize).clamp(1, n);
    let omega = w[m - 1];
    if !(omega > 0.0) {
        return Err(CraftError::DegenerateSpread(format!(
            "bend scale is zero (more than {m} of {n} values tie at the median)"
        )));
    }
    let mut below = 0usize;
    let mut above = 0usize;
    let mut inner_sum = 0.0;
    for &x in v {
        let psi = (x - med) / omega;
        if psi < -1.0 {
            below += 1;
        } else if psi > 1.0 {
            above += 1;
        } else {
            inner_sum += x;
        }
    }
    let theta = (omega * (above as f64 - below as f64) + inner_sum) / (n - below - above) as f64;
    Ok(v.iter().map(|x| ((x - theta) / omega).clamp(-1.0, 1.0)).collect())
}

/// Wilcox's percentage-bend correlation.
pub fn percentage_bend_correlation(x: &[f64], y: &[f64], bend: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CraftError::Shape(format!("{} vs {} values", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(CraftError::invalid("percentage-bend correlation needs n >= 3"));
    }
    if !(bend > 0.0 && bend < 0.5) {
        return Err(CraftError::invalid(format!("bend must lie in (0, 0.5), got {bend}")));
    }
    let a = bend_scores(x, bend)?;
    let b = bend_scores(y, bend)?;
    let sab: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
    let saa: f64 = a.iter().map(|p| p * p).sum();
    let sbb: f64 = b.iter().map(|q| q * q).sum();
    let denom = (saa * sbb).sqrt();
    if !(denom > 0.0) {
        return Err(CraftError::DegenerateSpread("all bent scores are zero".into()));
    }
    Ok((sab / denom).clamp(-1.0, 1.0))
}

pub fn evaluate_predictions(pred: &[f64], truth: &[f64]) -> Result<MetricPair> {
    let rmse = rmse(pred, truth)?;
    let pbcor = match percentage_bend_correlation(pred, truth, DEFAULT_BEND) {
        Ok(r) => Some(r),
        Err(CraftError::DegenerateSpread(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricPair { rmse, pbcor })
}

/// Predictions in label units for a dataset in original units.
pub fn predict(params: &RegressorParams, ds: &Dataset, scaler: &ScalerParams) -> Result<Vec<f64>> {
    let x = scaler.scale_features(ds.features())?;
    Ok(forward_batch(params, &x)?
        .into_iter()
        .map(|f| scaler.unscale_label(f))
        .collect())
}

/// Metrics of `params` on a fully labeled test set given in original units.
pub fn evaluate(params: &RegressorParams, test: &Dataset, scaler: &ScalerParams) -> Result<MetricPair> {
    test.require_fully_labeled("evaluate")?;
    evaluate_predictions(&predict(params, test, scaler)?, test.labels())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5f64.sqrt());
        assert!((12.5f64.sqrt() - 3.53553).abs() < 1e-5);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        let a = rmse(&[1.0, 5.0, -2.0], &[0.0, 4.5, 1.0]).unwrap();
        let b = rmse(&[-2.0, 1.0, 5.0], &[1.0, 0.0, 4.5]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pbcor_perfect_lines() {
        let x: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).sin() * 3.0 + i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((percentage_bend_correlation(&x, &y, 0.2).unwrap() - 1.0).abs() < 1e-12);
        assert!((percentage_bend_correlation(&x, &neg, 0.2).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pbcor_degenerate_and_bad_input() {
        let x = [1.0, 1.0, 1.0, 1.0, 2.0];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(matches!(
            percentage_bend_correlation(&x, &y, 0.2),
            Err(CraftError::DegenerateSpread(_))
        ));
        assert!(percentage_bend_correlation(&y[..2], &y[..2], 0.2).is_err());
        assert!(percentage_bend_correlation(&y, &y, 0.5).is_err());
        assert!(percentage_bend_correlation(&y, &y[..4], 0.2).is_err());
    }

    #[test]
    fn constant_predictor_has_undefined_correlation() {
        let m = evaluate_predictions(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.pbcor, None);
        assert!((m.rmse - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((m.rmse - 0.81650).abs() < 1e-5);
    }

    #[test]
    fn known_reference_values() {
        // frozen from an independent numpy implementation of the Wilcox procedure
        let x = [1.2, 3.4, -0.5, 2.2, 8.0, 0.1, 1.9, 2.8, -1.1, 4.4];
        let y = [0.7, 2.9, 0.3, 1.0, 3.1, -0.2, 2.5, 2.0, -3.0, 6.0];
        let r = percentage_bend_correlation(&x, &y, 0.2).unwrap();
        assert!((r - PBCOR_REFERENCE).abs() < 1e-10, "{r}");
    }

    const PBCOR_REFERENCE: f64 = 0.9327414242097856;
}
