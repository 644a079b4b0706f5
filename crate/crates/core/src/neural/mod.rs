//! Feed-forward neural networks trained by backpropagation and Adam.
//!
//! Layers compute `a_out = f(a_in · W + b)` with `W` stored row-major as
//! `in_dim × out_dim`, so a network with one hidden layer and an identity
//! output evaluates `y = σ(x W₁ + b₁) W₂ + b₂` for a row vector `x`.

mod adam;
mod backprop;
mod dataset;
mod io;
mod loss;
mod matrix;
mod train;

pub use adam::Adam;
pub use backprop::{backward, Gradients, LayerGradient};
pub use dataset::Dataset;
pub use io::{load_model, save_model};
pub use loss::{loss_bce, loss_mse, Loss, BCE_EPS};
pub use matrix::Matrix;
pub use train::{train, TrainConfig, TrainOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{Domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output `a = f(z)`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Largest `f64` below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, kept inside the open interval (0, 1) where rounding
/// would otherwise saturate it.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        (1.0 / (1.0 + (-z).exp())).min(BELOW_ONE)
    } else {
        let e = z.exp();
        (e / (1.0 + e)).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major `in_dim × out_dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Validation(
                "layer dimensions must be positive".into(),
            ));
        }
        if weights.len() != in_dim * out_dim {
            return Err(Error::DimensionMismatch {
                expected: in_dim * out_dim,
                actual: weights.len(),
            });
        }
        if bias.len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                actual: bias.len(),
            });
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Validation("layer parameters must be finite".into()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weights = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.out_dim + j]
    }

    /// `out` (rows × out_dim) = f(input · W + b).
    fn forward_into(&self, input: &[f64], rows: usize, out: &mut Vec<f64>) {
        out.clear();
        out.resize(rows * self.out_dim, 0.0);
        for (x, o) in input
            .chunks_exact(self.in_dim)
            .zip(out.chunks_exact_mut(self.out_dim))
        {
            o.copy_from_slice(&self.bias);
            for (&xk, w) in x.iter().zip(self.weights.chunks_exact(self.out_dim)) {
                if xk != 0.0 {
                    for (oj, &wj) in o.iter_mut().zip(w) {
                        *oj += xk * wj;
                    }
                }
            }
            if self.activation != Activation::Identity {
                for v in o.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            }
        }
    }
}

/// Multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Validates that consecutive layer dimensions chain.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Validation("model needs at least one layer".into()));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].out_dim != w[1].in_dim {
                return Err(Error::Validation(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    w[0].out_dim,
                    i + 1,
                    w[1].in_dim
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialized network. `layers` lists `(units, activation)` for
    /// every layer after the input, the last one being the output layer.
    pub fn new(input_dim: usize, layers: &[(usize, Activation)], seed: u64) -> Result<Self> {
        if input_dim == 0 || layers.iter().any(|&(u, _)| u == 0) {
            return Err(Error::Validation("layer sizes must be positive".into()));
        }
        let mut rng = StreamRng::new(seed, Domain::Init, 0);
        let mut prev = input_dim;
        let mut built = Vec::with_capacity(layers.len());
        for &(units, act) in layers {
            built.push(Layer::glorot(prev, units, act, &mut rng));
            prev = units;
        }
        Self::from_layers(built)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn output_activation(&self) -> Activation {
        self.layers[self.layers.len() - 1].activation
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: input.len(),
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "input contains non-finite values".into(),
            ));
        }
        let mut a = input.to_vec();
        let mut b = Vec::new();
        for layer in &self.layers {
            layer.forward_into(&a, 1, &mut b);
            std::mem::swap(&mut a, &mut b);
        }
        Ok(a)
    }

    /// Row-wise forward pass over a batch.
    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: inputs.cols(),
            });
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        self.forward_slice(inputs.as_slice(), inputs.rows(), &mut a, &mut b);
        Matrix::from_vec(inputs.rows(), self.output_dim(), a)
    }

    /// Unchecked batch forward into caller-owned buffers; result lands in `a`.
    pub(crate) fn forward_slice(
        &self,
        input: &[f64],
        rows: usize,
        a: &mut Vec<f64>,
        b: &mut Vec<f64>,
    ) {
        self.layers[0].forward_into(input, rows, a);
        for layer in &self.layers[1..] {
            layer.forward_into(a, rows, b);
            std::mem::swap(a, b);
        }
    }

    /// Outputs of every layer, starting with the input itself.
    pub(crate) fn forward_trace(&self, inputs: &Matrix) -> Vec<Vec<f64>> {
        let rows = inputs.rows();
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(inputs.as_slice().to_vec());
        for layer in &self.layers {
            let mut out = Vec::new();
            layer.forward_into(acts.last().expect("input present"), rows, &mut out);
            acts.push(out);
        }
        acts
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}
