use super::loss::{bce_term, BCE_EPS};
use super::{Activation, Loss, Matrix, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    /// Row-major, same layout as the layer's weights.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
    /// Loss of the batch at the current parameters.
    pub loss: f64,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|g| g.weights.iter().chain(&g.bias))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Gradient of the batch loss with respect to every weight and bias, by
/// reverse-mode accumulation.
///
/// With a sigmoid output under BCE, the output error is the fused
/// `ŷ − y`, the exact derivative of the loss away from the clamp bounds.
pub fn backward(model: &Mlp, inputs: &Matrix, targets: &Matrix, loss: Loss) -> Result<Gradients> {
    let rows = inputs.rows();
    if rows == 0 {
        return Err(Error::InvalidArgument(
            "backward pass over an empty batch".into(),
        ));
    }
    if inputs.cols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: inputs.cols(),
        });
    }
    if targets.rows() != rows || targets.cols() != model.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: rows * model.output_dim(),
            actual: targets.rows() * targets.cols(),
        });
    }

    let acts = model.forward_trace(inputs);
    let out = acts.last().expect("output present");
    let y = targets.as_slice();
    let last = model.output_activation();

    // δ = ∂E/∂z for the output layer
    let mut delta: Vec<f64> = Vec::with_capacity(out.len());
    let value = match loss {
        Loss::Mse => {
            let scale = 1.0 / rows as f64;
            let mut sum = 0.0;
            for (&p, &t) in out.iter().zip(y) {
                sum += (t - p) * (t - p);
                delta.push((p - t) * scale * last.derivative_from_output(p));
            }
            sum / (2.0 * rows as f64)
        }
        Loss::Bce => {
            let mut sum = 0.0;
            for (&p, &t) in out.iter().zip(y) {
                if t != 0.0 && t != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "binary target must be 0 or 1, got {t}"
                    )));
                }
                sum += bce_term(p, t);
                delta.push(if last == Activation::Sigmoid {
                    p - t
                } else if p <= BCE_EPS || p >= 1.0 - BCE_EPS {
                    0.0
                } else {
                    (-t / p + (1.0 - t) / (1.0 - p)) * last.derivative_from_output(p)
                });
            }
            sum
        }
    };

    let layers = model.layers();
    let mut grads: Vec<LayerGradient> = Vec::with_capacity(layers.len());
    for (li, layer) in layers.iter().enumerate().rev() {
        let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
        let a_prev = &acts[li];
        let mut gw = vec![0.0; in_dim * out_dim];
        let mut gb = vec![0.0; out_dim];
        for (x, d) in a_prev.chunks_exact(in_dim).zip(delta.chunks_exact(out_dim)) {
            for (b, &dj) in gb.iter_mut().zip(d) {
                *b += dj;
            }
            for (&xk, gw_row) in x.iter().zip(gw.chunks_exact_mut(out_dim)) {
                if xk != 0.0 {
                    for (g, &dj) in gw_row.iter_mut().zip(d) {
                        *g += xk * dj;
                    }
                }
            }
        }
        if li > 0 {
            let act = layers[li - 1].activation();
            let mut prev = vec![0.0; rows * in_dim];
            for ((p_row, d), a_row) in prev
                .chunks_exact_mut(in_dim)
                .zip(delta.chunks_exact(out_dim))
                .zip(a_prev.chunks_exact(in_dim))
            {
                for ((p, w_row), &a) in p_row
                    .iter_mut()
                    .zip(layer.weights().chunks_exact(out_dim))
                    .zip(a_row)
                {
                    let dot: f64 = w_row.iter().zip(d).map(|(w, dj)| w * dj).sum();
                    *p = dot * act.derivative_from_output(a);
                }
            }
            delta = prev;
        }
        grads.push(LayerGradient {
            weights: gw,
            bias: gb,
        });
    }
    grads.reverse();
    Ok(Gradients {
        layers: grads,
        loss: value,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Layer;
    use super::*;

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let model = Mlp::new(3, &[(4, Activation::Tanh), (2, Activation::Identity)], 5).unwrap();
        let x = Matrix::from_rows(&[vec![0.1, -0.4, 0.9], vec![1.0, 0.5, -0.2]]).unwrap();
        let y = model.forward_batch(&x).unwrap();
        let g = backward(&model, &x, &y, Loss::Mse).unwrap();
        assert_eq!(g.loss, 0.0);
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn linear_layer_closed_form() {
        // E = 1/(2M) Σ‖xW + b − y‖²  ⇒  ∂E/∂W = (1/M) Xᵀ(ŷ − y), ∂E/∂b = (1/M) Σ(ŷ − y)
        let w = vec![0.3, -0.7, 1.1, 0.2, -0.5, 0.9];
        let b = vec![0.05, -0.1];
        let model =
            Mlp::from_layers(vec![Layer::new(3, 2, w, b, Activation::Identity).unwrap()]).unwrap();
        let x = Matrix::from_rows(&[
            vec![1.0, 2.0, -1.0],
            vec![0.5, -0.3, 0.8],
            vec![-1.2, 0.4, 0.0],
        ])
        .unwrap();
        let y = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let pred = model.forward_batch(&x).unwrap();
        let m = 3.0;
        let g = backward(&model, &x, &y, Loss::Mse).unwrap();
        for k in 0..3 {
            for j in 0..2 {
                let expected: f64 = (0..3)
                    .map(|r| x.get(r, k) * (pred.get(r, j) - y.get(r, j)))
                    .sum::<f64>()
                    / m;
                assert!((g.layers[0].weights[k * 2 + j] - expected).abs() < 1e-14);
            }
        }
        for j in 0..2 {
            let expected: f64 = (0..3).map(|r| pred.get(r, j) - y.get(r, j)).sum::<f64>() / m;
            assert!((g.layers[0].bias[j] - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_errors() {
        let model = Mlp::new(2, &[(1, Activation::Sigmoid)], 1).unwrap();
        let x = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(backward(&model, &x, &Matrix::zeros(2, 1), Loss::Bce).is_err());
        assert!(backward(
            &model,
            &Matrix::zeros(1, 3),
            &Matrix::zeros(1, 1),
            Loss::Bce
        )
        .is_err());
        assert!(backward(
            &model,
            &Matrix::zeros(0, 2),
            &Matrix::zeros(0, 1),
            Loss::Bce
        )
        .is_err());
        let half = Matrix::from_rows(&[vec![0.5]]).unwrap();
        assert!(backward(&model, &x, &half, Loss::Bce).is_err());
    }
}
