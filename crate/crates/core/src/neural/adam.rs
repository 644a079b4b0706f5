use super::{Gradients, Mlp};
use crate::error::{Error, Result};

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    // one moment buffer per layer, weights then bias
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    fn ensure_state(&mut self, model: &Mlp) -> Result<()> {
        let sizes: Vec<usize> = model
            .layers()
            .iter()
            .map(|l| l.weights().len() + l.bias().len())
            .collect();
        if self.m.is_empty() {
            self.m = sizes.iter().map(|&n| vec![0.0; n]).collect();
            self.v = self.m.clone();
        } else if self.m.iter().map(Vec::len).ne(sizes.iter().copied()) {
            return Err(Error::DimensionMismatch {
                expected: self.m.iter().map(Vec::len).sum(),
                actual: sizes.iter().sum(),
            });
        }
        Ok(())
    }

    pub fn step(&mut self, model: &mut Mlp, grads: &Gradients) -> Result<()> {
        self.ensure_state(model)?;
        if grads.layers.len() != model.layers().len() {
            return Err(Error::DimensionMismatch {
                expected: model.layers().len(),
                actual: grads.layers.len(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.learning_rate, self.epsilon);
        for (((layer, g), m), v) in model
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let nw = layer.weights().len();
            if g.weights.len() != nw || g.bias.len() != layer.bias().len() {
                return Err(Error::DimensionMismatch {
                    expected: nw,
                    actual: g.weights.len(),
                });
            }
            let (mw, mb) = m.split_at_mut(nw);
            let (vw, vb) = v.split_at_mut(nw);
            let update = |params: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64]| {
                for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(m).zip(v) {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                }
            };
            update(layer.weights_mut(), &g.weights, mw, vw);
            update(layer.bias_mut(), &g.bias, mb, vb);
        }
        Ok(())
    }
}

impl Default for Adam {
    fn default() -> Self {
        Self::new(1e-3, 0.9, 0.999, 1e-8)
    }
}
