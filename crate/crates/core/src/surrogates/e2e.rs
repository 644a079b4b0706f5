use serde::{Deserialize, Serialize};

use super::metrics::qoi_accuracy;
use super::SplitDataset;
use crate::error::{Error, Result};
use crate::network::check_probs;
use crate::neural::{train, Activation, Loss, Matrix, Mlp, TrainConfig};

/// Hidden widths of the default end-to-end regressor.
pub const E2E_HIDDEN: [usize; 5] = [64, 32, 32, 16, 8];
/// Final learning-rate fraction used when training the end-to-end surrogate.
/// Decaying the rate keeps the output offset from jittering with the last
/// few mini-batches, which matters because accuracy is judged on the mean.
pub const E2E_LR_FINAL: f64 = 0.03;

/// Sigmoid hidden layers and one identity output.
pub fn e2e_layers(hidden: &[usize]) -> Vec<(usize, Activation)> {
    hidden
        .iter()
        .map(|&u| (u, Activation::Sigmoid))
        .chain([(1, Activation::Identity)])
        .collect()
}

/// Maps roadway survival probabilities straight to expected connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndSurrogate {
    model: Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct E2eMetrics {
    /// Mean squared error of clamped predictions on held-out rows.
    pub mse: f64,
    /// Relative accuracy of the held-out mean prediction against the mean
    /// label; `None` when every label is 0.
    pub alpha_qoi: Option<f64>,
}

impl EndToEndSurrogate {
    pub fn new(model: Mlp) -> Result<Self> {
        if model.output_dim() != 1 {
            return Err(Error::Validation(format!(
                "end-to-end model must have 1 output, has {}",
                model.output_dim()
            )));
        }
        Ok(Self { model })
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    /// Clamped prediction for one survival-probability vector.
    pub fn predict(&self, probs: &[f64]) -> Result<f64> {
        if probs.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: probs.len(),
            });
        }
        check_probs(probs)?;
        Ok(self.model.forward(probs)?[0].clamp(0.0, 1.0))
    }

    /// Predictions for `rows × input_dim` probabilities, row-major.
    pub fn predict_batch(&self, probs: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if !probs.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: probs.len() % d,
            });
        }
        check_probs(probs)?;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        self.model
            .forward_slice(probs, probs.len() / d, &mut a, &mut b);
        Ok(a.into_iter().map(|y| y.clamp(0.0, 1.0)).collect())
    }

    pub fn to_json(&self) -> String {
        self.model.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(Mlp::from_json(text)?)
    }

    /// Held-out error of the surrogate on labeled rows.
    pub fn evaluate(&self, inputs: &Matrix, targets: &Matrix) -> Result<E2eMetrics> {
        if inputs.rows() == 0 {
            return Err(Error::InvalidArgument(
                "cannot evaluate on an empty dataset".into(),
            ));
        }
        let pred = self.predict_batch(inputs.as_slice())?;
        let y = targets.as_slice();
        let n = y.len() as f64;
        let mse = pred
            .iter()
            .zip(y)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        let mean_label = y.iter().sum::<f64>() / n;
        let alpha_qoi = if mean_label > 0.0 {
            Some(qoi_accuracy(mean_label, pred.iter().sum::<f64>() / n)?)
        } else {
            None
        };
        Ok(E2eMetrics { mse, alpha_qoi })
    }
}

pub fn predict_e2e(surrogate: &EndToEndSurrogate, probs: &[f64]) -> Result<f64> {
    surrogate.predict(probs)
}

/// Train a regressor with MSE loss; metrics are for the held-out split.
pub fn train_e2e(
    data: &SplitDataset,
    hidden: &[usize],
    config: &TrainConfig,
    init_seed: u64,
) -> Result<(EndToEndSurrogate, Vec<f64>, Option<E2eMetrics>)> {
    if config.loss != Loss::Mse {
        return Err(Error::InvalidArgument(
            "the end-to-end surrogate is trained with MSE loss".into(),
        ));
    }
    if let Some(y) = data
        .train
        .targets
        .as_slice()
        .iter()
        .find(|y| !(0.0..=1.0).contains(*y))
    {
        return Err(Error::InvalidArgument(format!(
            "target {y} is outside [0, 1]"
        )));
    }
    let model = Mlp::new(data.train.input_dim(), &e2e_layers(hidden), init_seed)?;
    let outcome = train(model, &data.train, config)?;
    let surrogate = EndToEndSurrogate::new(outcome.model)?;
    let metrics = if data.eval.is_empty() {
        None
    } else {
        Some(surrogate.evaluate(&data.eval.inputs, &data.eval.targets)?)
    };
    Ok((surrogate, outcome.history, metrics))
}
