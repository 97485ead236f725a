use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{CraftError, Result};
use crate::regressor::{backward_cached, forward_cached, Gradients, RegressorParams};

/// The three parameter-dependent terms of the combined loss.
///
/// `total = supervised + alpha * (unsup_quadratic + unsup_contrastive)`.
/// `unsup_contrastive` is a sum of log-sum-exps and can be negative, but each
/// per-sample pair `d_ii + LSE_l(-d_il)` lies in `[0, d_ii + ln n]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub supervised: f64,
    pub unsup_quadratic: f64,
    pub unsup_contrastive: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn accumulate(&mut self, other: &LossBreakdown) {
        self.supervised += other.supervised;
        self.unsup_quadratic += other.unsup_quadratic;
        self.unsup_contrastive += other.unsup_contrastive;
        self.total += other.total;
    }
}

/// One mini-batch: features, supervised targets (for labeled rows) and the
/// fixed pseudo-label `ỹ_i` of every row.
#[derive(Debug, Clone, Copy)]
pub struct LossInput<'a> {
    pub x: &'a Matrix,
    pub targets: &'a [Option<f64>],
    pub pseudo: &'a [f64],
}

/// Loss and `∂L/∂f_i` from batch predictions.
///
/// `L = Σ_labeled (y_i - f_i)² + α Σ_i [d_ii + LSE_l(-d_il)]` with
/// `d_il = (ỹ_i - f_l)² / 2c`. The unsupervised part is skipped entirely when
/// `alpha == 0`.
pub fn loss_from_predictions(
    predictions: &[f64],
    targets: &[Option<f64>],
    pseudo: &[f64],
    alpha: f64,
    c: f64,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let n = predictions.len();
    if n == 0 {
        return Err(CraftError::invalid("loss needs a nonempty batch"));
    }
    if targets.len() != n || pseudo.len() != n {
        return Err(CraftError::Shape(format!(
            "{n} predictions, {} targets, {} pseudo-labels",
            targets.len(),
            pseudo.len()
        )));
    }
    if !(alpha >= 0.0) || !(c > 0.0) {
        return Err(CraftError::invalid("loss needs alpha >= 0 and c > 0"));
    }
    let mut out = LossBreakdown::default();
    let mut upstream = vec![0.0; n];
    for i in 0..n {
        if let Some(y) = targets[i] {
            let r = predictions[i] - y;
            out.supervised += r * r;
            upstream[i] += 2.0 * r;
        }
    }
    if alpha > 0.0 {
        let two_c = 2.0 * c;
        let mut neg_d = vec![0.0; n];
        for i in 0..n {
            let target = pseudo[i];
            for (l, nd) in neg_d.iter_mut().enumerate() {
                let diff = target - predictions[l];
                *nd = -(diff * diff) / two_c;
            }
            let lse = crate::numeric::log_sum_exp(&neg_d);
            out.unsup_quadratic += -neg_d[i];
            out.unsup_contrastive += lse;
            // ∂/∂f_l [d_ii + lse] = δ_il (f_i - ỹ_i)/c - s_il (f_l - ỹ_i)/c
            upstream[i] += alpha * (predictions[i] - target) / c;
            for l in 0..n {
                let s = (neg_d[l] - lse).exp();
                upstream[l] -= alpha * s * (predictions[l] - target) / c;
            }
        }
    }
    out.total = out.supervised + alpha * (out.unsup_quadratic + out.unsup_contrastive);
    if !out.total.is_finite() {
        return Err(CraftError::NonFiniteLoss(format!("{out:?}")));
    }
    Ok((out, upstream))
}

pub fn craft_loss_and_grad(
    params: &RegressorParams,
    input: LossInput<'_>,
    alpha: f64,
    c: f64,
) -> Result<(LossBreakdown, Gradients)> {
    let cache = forward_cached(params, input.x)?;
    let (loss, upstream) = loss_from_predictions(cache.outputs(), input.targets, input.pseudo, alpha, c)?;
    Ok((loss, backward_cached(params, &cache, &upstream)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_zero_is_plain_squared_error() {
        let f = [0.5, -0.2, 1.0];
        let t = [Some(1.0), None, Some(0.0)];
        let (l, up) = loss_from_predictions(&f, &t, &[0.9, -0.7, 0.3], 0.0, 0.5).unwrap();
        assert_eq!(l.supervised, 0.25 + 1.0);
        assert_eq!(l.total, l.supervised);
        assert_eq!((l.unsup_quadratic, l.unsup_contrastive), (0.0, 0.0));
        assert_eq!(up, vec![-1.0, 0.0, 2.0]);
    }

    #[test]
    fn singleton_collapses_to_zero() {
        let (l, up) = loss_from_predictions(&[0.3], &[None], &[-0.7], 1.0, 0.5).unwrap();
        assert_eq!(l.unsup_quadratic + l.unsup_contrastive, 0.0);
        assert_eq!(l.total, 0.0);
        assert_eq!(up, vec![0.0]);
    }

    #[test]
    fn two_sample_hand_value() {
        let (l, _) = loss_from_predictions(&[-1.0, 1.0], &[None, None], &[-1.0, 1.0], 1.0, 0.5).unwrap();
        let per = (1.0 + (-4.0f64).exp()).ln();
        assert!((per - 0.0181499).abs() < 1e-7);
        assert!((l.total - 2.0 * per).abs() < 1e-15, "{l:?}");
        assert!((l.total - 0.0362997).abs() < 2e-7);
        assert_eq!(l.unsup_quadratic, 0.0);
    }

    #[test]
    fn stays_finite_for_huge_residuals() {
        let f = [1000.0, -1000.0, 0.0];
        let (l, up) = loss_from_predictions(&f, &[Some(0.0), None, None], &[-1.0, 1.0, 0.0], 0.1, 0.5).unwrap();
        assert!(l.total.is_finite());
        assert!(up.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_empty_and_bad_hyperparameters() {
        assert!(loss_from_predictions(&[], &[], &[], 0.1, 0.5).is_err());
        assert!(loss_from_predictions(&[0.0], &[None], &[0.0], -1.0, 0.5).is_err());
        assert!(loss_from_predictions(&[0.0], &[None], &[0.0], 0.1, 0.0).is_err());
        assert!(loss_from_predictions(&[0.0], &[None, None], &[0.0], 0.1, 0.5).is_err());
    }

    proptest::proptest! {
        #[test]
        fn unsupervised_sum_is_bounded(
            f in proptest::collection::vec(-3.0f64..3.0, 1..12),
            shift in -2.0f64..2.0,
            c in 0.05f64..2.0,
        ) {
            let n = f.len();
            let pseudo: Vec<f64> = f.iter().enumerate().map(|(i, v)| v + shift * (i % 3) as f64).collect();
            let (l, _) = loss_from_predictions(&f, &vec![None; n], &pseudo, 1.0, c).unwrap();
            let unsup = l.unsup_quadratic + l.unsup_contrastive;
            proptest::prop_assert!(unsup >= -1e-12);
            proptest::prop_assert!(unsup <= l.unsup_quadratic + n as f64 * (n as f64).ln() + 1e-12);
        }
    }
}
