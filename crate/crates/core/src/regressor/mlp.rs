use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{CraftError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Layer widths `[d, h_1, ..., h_k, 1]`; hidden layers use `activation`, the
/// output layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layers: Vec<usize>,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(layers: Vec<usize>, activation: Activation) -> Result<Self> {
        let spec = MlpSpec { layers, activation };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(CraftError::invalid("network needs an input and an output layer"));
        }
        if self.layers.contains(&0) {
            return Err(CraftError::invalid("layer sizes must be >= 1"));
        }
        if *self.layers.last().unwrap() != 1 {
            return Err(CraftError::invalid("output layer must have width 1"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0]
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len() - 1
    }
}

/// Per-layer weights (`out × in`, row-major) and biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorParams {
    pub spec: MlpSpec,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Same block layout as [`RegressorParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &RegressorParams) -> Self {
        Gradients {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// `(name, values)` per block, in flat order.
    pub fn blocks(&self) -> impl Iterator<Item = (String, &[f64])> {
        self.weights.iter().zip(&self.biases).enumerate().flat_map(|(l, (w, b))| {
            [
                (format!("weights[{l}]"), w.as_slice()),
                (format!("biases[{l}]"), b.as_slice()),
            ]
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks()
            .flat_map(|(_, v)| v.iter().copied())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl RegressorParams {
    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Flat order: `weights[0], biases[0], weights[1], ...`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(CraftError::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.n_params()
            )));
        }
        let mut pos = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            b.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
        Ok(())
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let mut p = self.clone();
        p.set_flat(flat)?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let n = self.spec.n_layers();
        if self.weights.len() != n || self.biases.len() != n {
            return Err(CraftError::Shape(format!("expected {n} weight and bias blocks")));
        }
        for l in 0..n {
            let (fan_in, fan_out) = (self.spec.layers[l], self.spec.layers[l + 1]);
            if self.weights[l].len() != fan_in * fan_out || self.biases[l].len() != fan_out {
                return Err(CraftError::Shape(format!(
                    "layer {l} expects {fan_out}x{fan_in} weights and {fan_out} biases"
                )));
            }
        }
        if self.to_flat().iter().any(|v| !v.is_finite()) {
            return Err(CraftError::invalid("parameters must be finite"));
        }
        Ok(())
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &RegressorParams) -> f64 {
        self.to_flat()
            .iter()
            .zip(other.to_flat())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(spec: &MlpSpec, seed: u64) -> Result<RegressorParams> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(spec.n_layers());
    let mut biases = Vec::with_capacity(spec.n_layers());
    for l in 0..spec.n_layers() {
        let (fan_in, fan_out) = (spec.layers[l], spec.layers[l + 1]);
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push((0..fan_in * fan_out).map(|_| rng.random_range(-s..s)).collect());
        biases.push(vec![0.0; fan_out]);
    }
    Ok(RegressorParams {
        spec: spec.clone(),
        weights,
        biases,
    })
}

/// Post-activation values of every layer (input included), row-major.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    n: usize,
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn outputs(&self) -> &[f64] {
        self.activations.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

fn check_input(params: &RegressorParams, x: &Matrix) -> Result<()> {
    if x.cols() != params.spec.input_dim() {
        return Err(CraftError::Shape(format!(
            "network expects {} features, got {}",
            params.spec.input_dim(),
            x.cols()
        )));
    }
    Ok(())
}

pub fn forward_cached(params: &RegressorParams, x: &Matrix) -> Result<ForwardCache> {
    check_input(params, x)?;
    let n = x.rows();
    let n_layers = params.spec.n_layers();
    let mut activations = Vec::with_capacity(n_layers + 1);
    activations.push(x.as_slice().to_vec());
    for l in 0..n_layers {
        let (fan_in, fan_out) = (params.spec.layers[l], params.spec.layers[l + 1]);
        let w = &params.weights[l];
        let b = &params.biases[l];
        let input = &activations[l];
        let mut out = vec![0.0; n * fan_out];
        let hidden = l + 1 < n_layers;
        for i in 0..n {
            let a = &input[i * fan_in..(i + 1) * fan_in];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let z = b[o] + row.iter().zip(a).map(|(wv, av)| wv * av).sum::<f64>();
                out[i * fan_out + o] = if hidden { params.spec.activation.apply(z) } else { z };
            }
        }
        activations.push(out);
    }
    Ok(ForwardCache { n, activations })
}

pub fn forward_batch(params: &RegressorParams, x: &Matrix) -> Result<Vec<f64>> {
    Ok(forward_cached(params, x)?.activations.pop().unwrap())
}

/// Gradient of `Σ_i upstream_i · f(x_i; θ)` using activations from a prior
/// forward pass with the same parameters.
pub fn backward_cached(
    params: &RegressorParams,
    cache: &ForwardCache,
    upstream: &[f64],
) -> Result<Gradients> {
    let n = cache.n;
    if upstream.len() != n {
        return Err(CraftError::Shape(format!(
            "{} upstream values for a batch of {n}",
            upstream.len()
        )));
    }
    let n_layers = params.spec.n_layers();
    let mut grads = Gradients::zeros_like(params);
    let mut delta = upstream.to_vec();
    for l in (0..n_layers).rev() {
        let (fan_in, fan_out) = (params.spec.layers[l], params.spec.layers[l + 1]);
        let input = &cache.activations[l];
        let gw = &mut grads.weights[l];
        let gb = &mut grads.biases[l];
        for i in 0..n {
            let a = &input[i * fan_in..(i + 1) * fan_in];
            for o in 0..fan_out {
                let d = delta[i * fan_out + o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                for (g, av) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(a) {
                    *g += d * av;
                }
            }
        }
        if l > 0 {
            let w = &params.weights[l];
            let mut prev = vec![0.0; n * fan_in];
            for i in 0..n {
                for o in 0..fan_out {
                    let d = delta[i * fan_out + o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, wv) in prev[i * fan_in..(i + 1) * fan_in]
                        .iter_mut()
                        .zip(&w[o * fan_in..(o + 1) * fan_in])
                    {
                        *p += d * wv;
                    }
                }
            }
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= params.spec.activation.derivative_from_output(*a);
            }
            delta = prev;
        }
    }
    Ok(grads)
}

pub fn backward(params: &RegressorParams, x: &Matrix, upstream: &[f64]) -> Result<Gradients> {
    let cache = forward_cached(params, x)?;
    backward_cached(params, &cache, upstream)
}
