use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, RegressorParams};
use crate::error::{CraftError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..AdamConfig::default()
        }
    }
}

/// Moment accumulators with the same block layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Gradients,
    pub v: Gradients,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &RegressorParams, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            t: 0,
        }
    }

    /// One bias-corrected Adam update. A non-finite gradient leaves both the
    /// parameters and the state untouched.
    pub fn step(&mut self, params: &mut RegressorParams, grads: &Gradients) -> Result<()> {
        for (name, values) in grads.blocks() {
            if values.iter().any(|g| !g.is_finite()) {
                return Err(CraftError::NonFiniteGradient(name));
            }
        }
        if grads.weights.len() != params.weights.len()
            || grads
                .weights
                .iter()
                .zip(&params.weights)
                .chain(grads.biases.iter().zip(&params.biases))
                .any(|(g, p)| g.len() != p.len())
        {
            return Err(CraftError::Shape("gradient layout differs from parameters".into()));
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let blocks = params
            .weights
            .iter_mut()
            .zip(&grads.weights)
            .zip(self.m.weights.iter_mut().zip(self.v.weights.iter_mut()))
            .chain(
                params
                    .biases
                    .iter_mut()
                    .zip(&grads.biases)
                    .zip(self.m.biases.iter_mut().zip(self.v.biases.iter_mut())),
            );
        for ((theta, g), (m, v)) in blocks {
            for k in 0..theta.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                theta[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::{Activation, MlpSpec};

    fn scalar(theta: f64) -> RegressorParams {
        // a 1-1 net with the bias pinned to zero gradient stands in for a scalar
        RegressorParams {
            spec: MlpSpec::new(vec![1, 1], Activation::Tanh).unwrap(),
            weights: vec![vec![theta]],
            biases: vec![vec![0.0]],
        }
    }

    fn grad(g: f64) -> Gradients {
        Gradients {
            weights: vec![vec![g]],
            biases: vec![vec![0.0]],
        }
    }

    #[test]
    fn first_step_size() {
        let mut p = scalar(0.0);
        let mut s = AdamState::new(&p, AdamConfig::with_lr(0.1));
        s.step(&mut p, &grad(1.0)).unwrap();
        let expected = -0.1 * (1.0 / (1.0 + 1e-8));
        assert!((p.weights[0][0] - expected).abs() < 1e-15);
        assert!((p.weights[0][0] - (-0.099999999)).abs() < 1e-11);
    }

    #[test]
    fn two_step_trace() {
        let mut p = scalar(0.5);
        let mut s = AdamState::new(&p, AdamConfig::with_lr(0.1));
        s.step(&mut p, &grad(1.0)).unwrap();
        s.step(&mut p, &grad(1.0)).unwrap();
        // hand-unrolled: with a constant gradient m̂ = v̂ = 1 after every step
        let (b1, b2) = (0.9f64, 0.999f64);
        let mut theta = 0.5;
        let (mut m, mut v) = (0.0, 0.0);
        for t in 1..=2 {
            m = b1 * m + (1.0 - b1);
            v = b2 * v + (1.0 - b2);
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            theta -= 0.1 * mh / (vh.sqrt() + 1e-8);
        }
        assert_eq!(p.weights[0][0], theta);
        assert!((theta - (0.5 - 0.2 / (1.0 + 1e-8))).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_or_zero_lr_is_identity() {
        let mut p = scalar(0.3);
        let mut s = AdamState::new(&p, AdamConfig::with_lr(0.1));
        for _ in 0..10 {
            s.step(&mut p, &grad(0.0)).unwrap();
        }
        assert_eq!(p.weights[0][0], 0.3);

        let mut p = scalar(0.3);
        let mut s = AdamState::new(&p, AdamConfig::with_lr(0.0));
        for g in [1.0, -2.0, 5.0] {
            s.step(&mut p, &grad(g)).unwrap();
        }
        assert_eq!(p.weights[0][0], 0.3);
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut p = scalar(0.3);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let g = Gradients {
            weights: vec![vec![1.0]],
            biases: vec![vec![f64::NAN]],
        };
        let e = s.step(&mut p, &g).unwrap_err();
        assert!(e.to_string().contains("biases[0]"), "{e}");
        assert_eq!(s.t, 0);
    }
}
