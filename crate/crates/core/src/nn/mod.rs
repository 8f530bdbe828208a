//! Dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! Parameters live in one flat vector: every layer's weight matrix (row-major,
//! `out x in`) in layer order, followed by every layer's bias vector. The
//! same layout is used for gradients, optimizer moments, and checkpoints.

mod adam;
pub mod checkpoint;
mod policy;

pub use adam::{adam_update, AdamConfig, AdamState, Direction};
pub use policy::{GaussianPolicy, PolicyGrads, PolicyOptimizer, ValueNet};

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("input has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backward called without a matching forward pass")]
    NoForwardRecorded,
    #[error("parameter/gradient shapes differ ({params} vs {grads})")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("network needs at least an input and an output layer")]
    EmptyNetwork,
}

/// Dense network with tanh hidden layers and an identity output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward_cached`]; `layers[0]` is the input.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    layers: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self, NnError> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(NnError::EmptyNetwork);
        }
        Ok(Self {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self, NnError> {
        let mut net = Self::zeros(dims)?;
        for l in 0..net.num_layers() {
            let (fan_in, fan_out) = (net.dims[l], net.dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in net.weights_mut(l) {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self, NnError> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(NnError::ShapeMismatch {
                params: net.params.len(),
                grads: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("validated non-empty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn weight_offset(&self, layer: usize) -> usize {
        self.dims[..=layer].windows(2).map(|w| w[0] * w[1]).sum()
    }

    fn weight_total(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1]).sum()
    }

    fn bias_offset(&self, layer: usize) -> usize {
        self.weight_total() + self.dims[1..=layer].iter().sum::<usize>()
    }

    fn weight_range(&self, layer: usize) -> std::ops::Range<usize> {
        let start = self.weight_offset(layer);
        start..start + self.dims[layer] * self.dims[layer + 1]
    }

    fn bias_range(&self, layer: usize) -> std::ops::Range<usize> {
        let start = self.bias_offset(layer);
        start..start + self.dims[layer + 1]
    }

    /// Row-major `out x in` weight matrix of `layer`.
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.weight_range(layer)]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.weight_range(layer);
        &mut self.params[r]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        &self.params[self.bias_range(layer)]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.bias_range(layer);
        &mut self.params[r]
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn layer_forward(&self, layer: usize, input: &[f64]) -> Vec<f64> {
        let w = self.weights(layer);
        let b = self.biases(layer);
        let n_in = self.dims[layer];
        let hidden = layer + 1 < self.num_layers();
        b.iter()
            .zip(w.chunks_exact(n_in))
            .map(|(bias, row)| {
                let z = bias + row.iter().zip(input).map(|(a, x)| a * x).sum::<f64>();
                if hidden {
                    z.tanh()
                } else {
                    z
                }
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(x)?;
        let mut h = x.to_vec();
        for l in 0..self.num_layers() {
            h = self.layer_forward(l, &h);
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, NnError> {
        self.check_input(x)?;
        let mut layers = Vec::with_capacity(self.dims.len());
        layers.push(x.to_vec());
        for l in 0..self.num_layers() {
            let next = self.layer_forward(l, &layers[l]);
            layers.push(next);
        }
        Ok(ForwardCache { layers })
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`
    /// and returns `d loss / d input`.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: &[f64],
        grads: &mut [f64],
    ) -> Result<Vec<f64>, NnError> {
        let cache_matches = cache.layers.len() == self.dims.len()
            && cache.layers.iter().zip(&self.dims).all(|(a, &d)| a.len() == d);
        if !cache_matches {
            return Err(NnError::NoForwardRecorded);
        }
        if grad_output.len() != self.output_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.output_dim(),
                got: grad_output.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(NnError::ShapeMismatch {
                params: self.params.len(),
                grads: grads.len(),
            });
        }

        let mut delta = grad_output.to_vec();
        for l in (0..self.num_layers()).rev() {
            let input = &cache.layers[l];
            let n_in = self.dims[l];
            // tanh'(z) = 1 - tanh(z)^2 on hidden layers
            if l + 1 < self.num_layers() {
                for (d, a) in delta.iter_mut().zip(&cache.layers[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let wr = self.weight_range(l);
            for (row, d) in grads[wr].chunks_exact_mut(n_in).zip(&delta) {
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            for (g, d) in grads[self.bias_range(l)].iter_mut().zip(&delta) {
                *g += d;
            }
            let w = self.weights(l);
            let mut upstream = vec![0.0; n_in];
            for (row, d) in w.chunks_exact(n_in).zip(&delta) {
                for (u, a) in upstream.iter_mut().zip(row) {
                    *u += d * a;
                }
            }
            delta = upstream;
        }
        Ok(delta)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
