use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{CraftError, Result};
use crate::numeric;

/// Hides labels so that each of `n_strata` equal-count label-quantile strata
/// keeps `round(keep_fraction * n_s)` labeled rows, chosen uniformly by seed.
/// Features and label values are untouched.
pub fn stratified_label_mask(
    ds: &Dataset,
    keep_fraction: f64,
    n_strata: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(CraftError::invalid(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    if n_strata == 0 {
        return Err(CraftError::invalid("n_strata must be at least 1"));
    }
    ds.require_fully_labeled("stratified_label_mask")?;

    let n = ds.len();
    let labels = ds.labels();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| labels[a].total_cmp(&labels[b]).then(a.cmp(&b)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for s in 0..n_strata {
        let start = s * n / n_strata;
        let end = (s + 1) * n / n_strata;
        let mut stratum = order[start..end].to_vec();
        let keep = (keep_fraction * stratum.len() as f64).round() as usize;
        stratum.shuffle(&mut rng);
        for &i in &stratum[..keep.min(stratum.len())] {
            mask[i] = true;
        }
    }
    ds.with_mask(mask)
}

/// Where the label distribution is cut for bias injection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasThreshold {
    Mean,
    Quantile(f64),
}

impl BiasThreshold {
    pub fn value(&self, labels: &[f64]) -> Result<f64> {
        match *self {
            BiasThreshold::Mean => Ok(numeric::mean(labels)),
            BiasThreshold::Quantile(q) => {
                if !(0.0..=1.0).contains(&q) {
                    return Err(CraftError::invalid(format!("quantile {q} outside [0, 1]")));
                }
                let mut sorted = labels.to_vec();
                sorted.sort_by(f64::total_cmp);
                Ok(numeric::quantile_sorted(&sorted, q))
            }
        }
    }
}

/// Drops rows whose label exceeds the threshold until only
/// `round(keep_fraction_above * n_above)` of them remain. Rows at or below
/// the threshold are all kept; row order is preserved.
pub fn inject_marginal_bias(
    ds: &Dataset,
    threshold: BiasThreshold,
    keep_fraction_above: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&keep_fraction_above) {
        return Err(CraftError::invalid(format!(
            "keep_fraction_above must lie in [0, 1], got {keep_fraction_above}"
        )));
    }
    ds.require_fully_labeled("inject_marginal_bias")?;
    let labels = ds.labels();
    let cut = threshold.value(labels)?;
    let mut above: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] > cut).collect();
    let keep = (keep_fraction_above * above.len() as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    above.shuffle(&mut rng);
    let mut retained = vec![false; ds.len()];
    for &i in &above[..keep] {
        retained[i] = true;
    }
    for (i, &y) in labels.iter().enumerate() {
        if y <= cut {
            retained[i] = true;
        }
    }
    let rows: Vec<usize> = (0..ds.len()).filter(|&i| retained[i]).collect();
    Ok(ds.subset(&rows))
}
