//! Fully connected feed-forward network with hand-written backpropagation.
//!
//! Hidden layers apply the configured activation; the output layer is affine, since
//! the heads accept any real `z`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(invalid(format!(
                "unknown activation '{other}' (expected relu or tanh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl NetworkConfig {
    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_layers.contains(&0) {
            return Err(invalid(format!(
                "layer widths must be positive (input {}, hidden {:?}, output {})",
                self.input_dim, self.hidden_layers, self.output_dim
            )));
        }
        Ok(())
    }
}

/// One affine map. `weights` is row-major with shape `(outputs, inputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.bias
                .iter()
                .zip(self.weights.chunks_exact(self.inputs))
                .map(|(&b, row)| b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

/// Inputs and pre-activations of every layer from one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

/// Same shapes as [`NetworkParams`]; holds `∂loss/∂θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradients {
    pub layers: Vec<Layer>,
}

impl ParamGradients {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights
                .iter_mut()
                .chain(l.bias.iter_mut())
                .for_each(|g| *g *= factor);
        }
    }

    /// Layer-ordered flat view: weights then bias, layer by layer.
    pub fn iter(&self) -> impl Iterator<Item = &f64> + Clone {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }
}

impl NetworkParams {
    /// Weights `U(-1/√fan_in, 1/√fan_in)`, biases zero. Draws come from
    /// ChaCha8 seeded with `config.seed`, layer by layer in row-major order.
    pub fn init(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut widths = Vec::with_capacity(config.hidden_layers.len() + 2);
        widths.push(config.input_dim);
        widths.extend_from_slice(&config.hidden_layers);
        widths.push(config.output_dim);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = 1.0 / libm::sqrt(inputs as f64);
                let mut layer = Layer::zeros(inputs, outputs);
                for v in &mut layer.weights {
                    *v = rng.gen_range(-bound..bound);
                }
                layer
            })
            .collect();
        Ok(Self {
            activation: config.activation,
            layers,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn hidden_layers(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.outputs)
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> + Clone {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Output only; no cache.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.affine(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            core::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let mut cache = ForwardCache::default();
        let z = self.forward_into(x, &mut cache)?;
        Ok((z, cache))
    }

    /// Forward pass reusing the buffers in `cache`.
    pub fn forward_into(&self, x: &[f64], cache: &mut ForwardCache) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let n = self.layers.len();
        cache.inputs.resize_with(n, Vec::new);
        cache.pre_activations.resize_with(n, Vec::new);
        cache.inputs[0].clear();
        cache.inputs[0].extend_from_slice(x);
        let act = self.activation;
        for i in 0..n {
            self.layers[i].affine(&cache.inputs[i], &mut cache.pre_activations[i]);
            if i + 1 < n {
                let out = &mut cache.inputs[i + 1];
                out.clear();
                out.extend(cache.pre_activations[i].iter().map(|&v| act.apply(v)));
            }
        }
        Ok(cache.pre_activations[n - 1].clone())
    }

    pub fn backward(&self, cache: &ForwardCache, grad_z: &[f64]) -> Result<ParamGradients> {
        let mut grads = ParamGradients::zeros_like(self);
        self.backward_accumulate(cache, grad_z, &mut grads)?;
        Ok(grads)
    }

    /// Adds `∂(grad_z · z)/∂θ` into `grads`.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        grad_z: &[f64],
        grads: &mut ParamGradients,
    ) -> Result<()> {
        let n = self.layers.len();
        if cache.inputs.len() != n || cache.pre_activations[n - 1].len() != self.output_dim() {
            return Err(invalid("forward cache does not match these parameters"));
        }
        if grad_z.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                found: grad_z.len(),
            });
        }
        let mut delta = grad_z.to_vec();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let input = &cache.inputs[i];
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(w, &x)| *w += d * x);
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                prev.iter_mut().zip(row).for_each(|(p, &w)| *p += d * w);
            }
            let pre = &cache.pre_activations[i - 1];
            for ((p, &x), &y) in prev.iter_mut().zip(pre).zip(input) {
                *p *= self.activation.derivative(x, y);
            }
            delta = prev;
        }
        Ok(())
    }
}
