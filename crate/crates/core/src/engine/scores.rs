use super::bins::BinGrid;
use crate::prior::LabelPrior;

/// Joint log scores for a batch of predictions, row-major `n × B`:
///
/// `s(i, b) = (-(y_b - f_i)² / 2c - LSE_l(-(y_b - f_l)² / 2c)) + log p(y_b)`
///
/// The Gaussian normalizing constant cancels between the two terms and is
/// omitted. The log-sum-exp runs over the whole batch.
pub fn joint_log_scores(predictions: &[f64], grid: &BinGrid, prior: &LabelPrior, c: f64) -> Vec<f64> {
    joint_log_scores_with(predictions, grid.midpoints(), &grid.log_prior(prior), c)
}

pub fn joint_log_scores_with(predictions: &[f64], midpoints: &[f64], log_prior: &[f64], c: f64) -> Vec<f64> {
    let n = predictions.len();
    let bins = midpoints.len();
    let two_c = 2.0 * c;
    let mut numer = vec![0.0; n * bins];
    for (i, &f) in predictions.iter().enumerate() {
        for (b, &y) in midpoints.iter().enumerate() {
            let diff = y - f;
            numer[i * bins + b] = -(diff * diff) / two_c;
        }
    }
    let mut out = vec![0.0; n * bins];
    for b in 0..bins {
        let mut max = f64::NEG_INFINITY;
        for i in 0..n {
            max = max.max(numer[i * bins + b]);
        }
        let mut sum = 0.0;
        for i in 0..n {
            sum += (numer[i * bins + b] - max).exp();
        }
        let lse = max + sum.ln();
        for i in 0..n {
            out[i * bins + b] = (numer[i * bins + b] - lse) + log_prior[b];
        }
    }
    out
}

/// Per-row argmax over bins. Ties go to the midpoint nearest the row's
/// prediction, then to the lowest index; NaN scores never win.
pub fn select_pseudo_label_indices(predictions: &[f64], midpoints: &[f64], log_prior: &[f64], c: f64) -> Vec<usize> {
    let scores = joint_log_scores_with(predictions, midpoints, log_prior, c);
    let bins = midpoints.len();
    predictions
        .iter()
        .enumerate()
        .map(|(i, &f)| argmax_row(&scores[i * bins..(i + 1) * bins], midpoints, f))
        .collect()
}

fn argmax_row(row: &[f64], midpoints: &[f64], f: f64) -> usize {
    let mut best = 0;
    let mut best_score = f64::NAN;
    for (b, &s) in row.iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        if best_score.is_nan() || s > best_score {
            best = b;
            best_score = s;
        } else if s == best_score && (midpoints[b] - f).abs() < (midpoints[best] - f).abs() {
            best = b;
        }
    }
    best
}

pub fn select_pseudo_labels(predictions: &[f64], grid: &BinGrid, prior: &LabelPrior, c: f64) -> Vec<f64> {
    let mids = grid.midpoints();
    select_pseudo_label_indices(predictions, mids, &grid.log_prior(prior), c)
        .into_iter()
        .map(|b| mids[b])
        .collect()
}
