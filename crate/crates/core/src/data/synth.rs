use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Matrix};
use crate::error::{CraftError, Result};

/// Parameters of a synthetic covariate-shift scenario. Source covariates are
/// standard normal; target covariates are `shift_mean + shift_scale * z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub scenario: String,
    pub d: usize,
    pub n_source: usize,
    pub n_target_train: usize,
    pub n_target_val: usize,
    pub n_target_test: usize,
    pub shift_mean: Vec<f64>,
    pub shift_scale: Vec<f64>,
    pub noise_std: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// d = 8, mean shift 0.5 and scale 1.3 on every coordinate, noise 0.1.
    pub fn default_scenario(seed: u64) -> Self {
        let d = 8;
        GeneratorSpec {
            scenario: "default-shift".into(),
            d,
            n_source: 4000,
            n_target_train: 2000,
            n_target_val: 500,
            n_target_test: 2000,
            shift_mean: vec![0.5; d],
            shift_scale: vec![1.3; d],
            noise_std: 0.1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(CraftError::invalid("generator needs d >= 1"));
        }
        if [self.n_source, self.n_target_train, self.n_target_val, self.n_target_test]
            .contains(&0)
        {
            return Err(CraftError::invalid("generator split counts must be >= 1"));
        }
        if self.shift_mean.len() != self.d || self.shift_scale.len() != self.d {
            return Err(CraftError::Shape(format!(
                "shift vectors must have length d = {}",
                self.d
            )));
        }
        if self.shift_scale.iter().any(|&s| !(s > 0.0 && s.is_finite()))
            || self.shift_mean.iter().any(|m| !m.is_finite())
        {
            return Err(CraftError::invalid("shift_scale must be positive and shifts finite"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(CraftError::invalid("noise_std must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSplits {
    pub source: Dataset,
    pub target_train: Dataset,
    pub target_val: Dataset,
    pub target_test: Dataset,
}

/// Shared ground truth: `Σ_j sin(x_j) + 0.5 * x_0 * x_1` (interaction only
/// when d >= 2).
pub fn ground_truth(x: &[f64]) -> f64 {
    let mut y: f64 = x.iter().map(|v| v.sin()).sum();
    if x.len() >= 2 {
        y += 0.5 * x[0] * x[1];
    }
    y
}

pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<SyntheticSplits> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| CraftError::invalid(e.to_string()))?;
    let ones = vec![1.0; spec.d];
    let zeros = vec![0.0; spec.d];

    let mut draw = |n: usize, mean: &[f64], scale: &[f64]| -> Result<Dataset> {
        let mut x = Vec::with_capacity(n * spec.d);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let start = x.len();
            for j in 0..spec.d {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.push(mean[j] + scale[j] * z);
            }
            let eps = if spec.noise_std > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            y.push(ground_truth(&x[start..]) + eps);
        }
        Dataset::labeled(Matrix::new(n, spec.d, x)?, y)
    };

    let source = draw(spec.n_source, &zeros, &ones)?;
    let target_train = draw(spec.n_target_train, &spec.shift_mean, &spec.shift_scale)?;
    let target_val = draw(spec.n_target_val, &spec.shift_mean, &spec.shift_scale)?;
    let target_test = draw(spec.n_target_test, &spec.shift_mean, &spec.shift_scale)?;
    Ok(SyntheticSplits {
        source,
        target_train,
        target_val,
        target_test,
    })
}
