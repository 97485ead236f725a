use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MixtureParams;
use crate::error::{CraftError, Result};
use crate::numeric;

/// Model order and stopping rule for [`em_fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub k1: usize,
    pub k2: usize,
    pub max_iters: usize,
    /// Stop once the mean per-sample log-likelihood improves by less than this.
    pub tol: f64,
    /// Minimum Gaussian variance; `None` means `1e-4 * range²`.
    pub var_floor: Option<f64>,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        MixtureSpec {
            k1: 2,
            k2: 1,
            max_iters: 500,
            tol: 1e-6,
            var_floor: None,
        }
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k1 + self.k2 == 0 {
            return Err(CraftError::invalid("mixture needs at least one component"));
        }
        if self.max_iters == 0 {
            return Err(CraftError::invalid("max_iters must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(CraftError::invalid("tol must be > 0"));
        }
        if let Some(f) = self.var_floor {
            if !(f > 0.0) {
                return Err(CraftError::invalid("var_floor must be > 0"));
            }
        }
        Ok(())
    }
}

/// Fit result plus the mean log-likelihood before the first iteration and
/// after every M-step.
#[derive(Debug, Clone)]
pub struct EmTrace {
    pub params: MixtureParams,
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn em_fit(labels: &[f64], spec: &MixtureSpec, seed: u64) -> Result<MixtureParams> {
    em_fit_traced(labels, spec, seed).map(|t| t.params)
}

pub fn em_fit_traced(labels: &[f64], spec: &MixtureSpec, seed: u64) -> Result<EmTrace> {
    spec.validate()?;
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(CraftError::invalid("EM labels must be finite"));
    }
    let k = spec.k1 + spec.k2;
    let mut sorted = labels.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(CraftError::Degenerate(
            "EM needs at least two distinct label values".into(),
        ));
    }
    if sorted.len() < k {
        return Err(CraftError::Degenerate(format!(
            "{} distinct values for {k} mixture components",
            sorted.len()
        )));
    }
    let lo = sorted[0];
    let range = sorted[sorted.len() - 1] - lo;
    let offset = if spec.k2 > 0 {
        (-lo).max(0.0) + 1e-6 * range
    } else {
        0.0
    };
    let var_floor = spec.var_floor.unwrap_or(1e-4 * range * range);
    let x: Vec<f64> = labels.iter().map(|y| y + offset).collect();
    let n = x.len();

    let mut params = initialize(&x, spec, offset, var_floor, seed);
    let mut resp = vec![0.0; n * k];
    let mut terms = Vec::with_capacity(k);

    let mut ll = e_step(&params, &x, &mut resp, &mut terms);
    if !ll.is_finite() {
        return Err(CraftError::NonFiniteLikelihood { iteration: 0 });
    }
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    for iteration in 1..=spec.max_iters {
        m_step(&mut params, &x, &resp, spec.k1, var_floor);
        let next = e_step(&params, &x, &mut resp, &mut terms);
        if !next.is_finite() {
            return Err(CraftError::NonFiniteLikelihood { iteration });
        }
        trace.push(next);
        iterations = iteration;
        let gain = next - ll;
        ll = next;
        if gain < spec.tol {
            converged = true;
            break;
        }
    }
    Ok(EmTrace {
        params,
        log_likelihoods: trace,
        iterations,
        converged,
    })
}

/// Gaussian means at evenly spaced quantiles, variances at the sample
/// variance, exponential rates at the inverse mean jittered by up to ±10%,
/// uniform weights.
fn initialize(x: &[f64], spec: &MixtureSpec, offset: f64, var_floor: f64, seed: u64) -> MixtureParams {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let var = numeric::variance(x).max(var_floor);
    let gaussians = (0..spec.k1)
        .map(|j| {
            let q = (j + 1) as f64 / (spec.k1 + 1) as f64;
            (numeric::quantile_sorted(&sorted, q), var)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base_rate = 1.0 / numeric::mean(x);
    let exponentials = (0..spec.k2)
        .map(|_| base_rate * (1.0 + rng.random_range(-0.1..=0.1)))
        .collect();
    let k = spec.k1 + spec.k2;
    MixtureParams {
        weights: vec![1.0 / k as f64; k],
        gaussians,
        exponentials,
        offset,
    }
}

/// Fills responsibilities and returns the mean log-likelihood.
fn e_step(params: &MixtureParams, x: &[f64], resp: &mut [f64], terms: &mut Vec<f64>) -> f64 {
    let k = params.n_components();
    let mut total = 0.0;
    for (i, &xi) in x.iter().enumerate() {
        params.component_log_terms(xi, terms);
        let lse = numeric::log_sum_exp(terms);
        total += lse;
        for z in 0..k {
            resp[i * k + z] = (terms[z] - lse).exp();
        }
    }
    total / x.len() as f64
}

fn m_step(params: &mut MixtureParams, x: &[f64], resp: &[f64], k1: usize, var_floor: f64) {
    let k = params.n_components();
    let n = x.len();
    for z in 0..k {
        let mass: f64 = (0..n).map(|i| resp[i * k + z]).sum();
        params.weights[z] = mass / n as f64;
        if mass <= 0.0 {
            // dead component: weight 0, shape parameters frozen
            continue;
        }
        let weighted_sum: f64 = (0..n).map(|i| resp[i * k + z] * x[i]).sum();
        if z < k1 {
            let mu = weighted_sum / mass;
            let var = (0..n)
                .map(|i| resp[i * k + z] * (x[i] - mu) * (x[i] - mu))
                .sum::<f64>()
                / mass;
            params.gaussians[z] = (mu, var.max(var_floor));
        } else {
            params.exponentials[z - k1] = mass / weighted_sum;
        }
    }
    let total: f64 = params.weights.iter().sum();
    for w in &mut params.weights {
        *w /= total;
    }
}
