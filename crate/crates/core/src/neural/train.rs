use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{backward, Adam, Dataset, Loss, Mlp};
use crate::error::{Error, Result};
use crate::rng::{Domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub loss: Loss,
    pub shuffle_seed: u64,
    /// Learning rate in the last epoch as a fraction of `learning_rate`; the
    /// rate decays geometrically in between. 1 keeps it constant.
    pub final_lr_fraction: f64,
}

impl TrainConfig {
    pub fn new(loss: Loss, epochs: usize, batch_size: usize) -> Self {
        Self {
            epochs,
            batch_size,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            loss,
            shuffle_seed: 0,
            final_lr_fraction: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "learning rate must be positive".into(),
            ));
        }
        for b in [self.adam_beta1, self.adam_beta2] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidArgument(format!(
                    "Adam beta {b} must lie in [0, 1)"
                )));
            }
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "final learning-rate fraction {} must lie in (0, 1]",
                self.final_lr_fraction
            )));
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::InvalidArgument(
                "Adam epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Mlp,
    /// Training-set loss accumulated over each epoch's mini-batches.
    pub history: Vec<f64>,
}

/// Mini-batch Adam training. Rows are reshuffled every epoch from the stream
/// `(shuffle_seed, Shuffle, epoch)`; the final partial batch is kept.
pub fn train(model: Mlp, data: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if data.input_dim() != model.input_dim() || data.target_dim() != model.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: data.input_dim(),
        });
    }
    let mut model = model;
    let mut history = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok(TrainOutcome { model, history });
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut adam = Adam::new(
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_epsilon,
    );
    let m = data.len();
    let mut order: Vec<usize> = (0..m).collect();
    let span = config.epochs.saturating_sub(1).max(1) as f64;
    for epoch in 0..config.epochs {
        adam.learning_rate =
            config.learning_rate * config.final_lr_fraction.powf(epoch as f64 / span);
        order.sort_unstable();
        order.shuffle(&mut StreamRng::new(
            config.shuffle_seed,
            Domain::Shuffle,
            epoch as u64,
        ));
        let mut epoch_loss = 0.0;
        for idx in order.chunks(config.batch_size) {
            let batch = data.subset(idx);
            let grads = backward(&model, &batch.inputs, &batch.targets, config.loss)?;
            if !grads.loss.is_finite() {
                return Err(Error::Numerical(format!(
                    "loss became {} in epoch {epoch}",
                    grads.loss
                )));
            }
            epoch_loss += match config.loss {
                // batch loss is normalized by its own size
                Loss::Mse => grads.loss * idx.len() as f64 / m as f64,
                Loss::Bce => grads.loss,
            };
            adam.step(&mut model, &grads)?;
        }
        if !model.is_finite() {
            return Err(Error::Numerical(format!(
                "parameters became non-finite in epoch {epoch}"
            )));
        }
        log::debug!("epoch {epoch}: loss {epoch_loss}");
        history.push(epoch_loss);
    }
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use super::super::{Activation, Matrix};
    use super::*;

    fn xor() -> Dataset {
        Dataset::new(
            Matrix::from_rows(&[
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
            ])
            .unwrap(),
            Matrix::from_rows(&[vec![0.0], vec![1.0], vec![1.0], vec![0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let model = Mlp::new(2, &[(2, Activation::Tanh), (1, Activation::Sigmoid)], 1).unwrap();
        let out = train(model.clone(), &xor(), &TrainConfig::new(Loss::Bce, 0, 4)).unwrap();
        assert_eq!(out.model, model);
        assert!(out.history.is_empty());
    }

    #[test]
    fn learns_xor() {
        let model = Mlp::new(2, &[(2, Activation::Tanh), (1, Activation::Sigmoid)], 11).unwrap();
        let mut cfg = TrainConfig::new(Loss::Bce, 5000, 4);
        cfg.learning_rate = 0.05;
        let out = train(model, &xor(), &cfg).unwrap();
        let last = *out.history.last().unwrap();
        assert!(last < 0.1, "final BCE {last}");
    }

    #[test]
    fn deterministic_given_seeds() {
        let data = xor();
        let mut cfg = TrainConfig::new(Loss::Bce, 50, 3);
        cfg.shuffle_seed = 99;
        let run = || {
            train(
                Mlp::new(2, &[(3, Activation::Relu), (1, Activation::Sigmoid)], 4).unwrap(),
                &data,
                &cfg,
            )
        };
        let (a, b) = (run().unwrap(), run().unwrap());
        assert_eq!(a.model, b.model);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn divergence_reported() {
        let model = Mlp::new(1, &[(1, Activation::Identity)], 1).unwrap();
        let data = Dataset::new(
            Matrix::from_rows(&[vec![1e200]]).unwrap(),
            Matrix::from_rows(&[vec![-1e200]]).unwrap(),
        )
        .unwrap();
        let err = train(model, &data, &TrainConfig::new(Loss::Mse, 3, 1)).unwrap_err();
        assert!(err.is_numerical(), "{err}");
    }

    #[test]
    fn decay_reaches_the_final_fraction() {
        let data = xor();
        let mut cfg = TrainConfig::new(Loss::Bce, 3, 4);
        cfg.learning_rate = 0.1;
        cfg.final_lr_fraction = 0.01;
        // rates 0.1, 0.01, 0.001; two epochs at fraction 0.1 share the first two
        let model = Mlp::new(2, &[(1, Activation::Sigmoid)], 1).unwrap();
        let two = TrainConfig {
            epochs: 2,
            final_lr_fraction: 0.1,
            ..cfg
        };
        let a = train(model.clone(), &data, &two).unwrap().model;
        let b = train(model, &data, &cfg).unwrap().model;
        let moved = (b.layers()[0].bias()[0] - a.layers()[0].bias()[0]).abs();
        assert!(moved > 0.0 && moved < 2e-3, "{moved}");
        cfg.final_lr_fraction = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_validation() {
        let model = Mlp::new(2, &[(1, Activation::Sigmoid)], 1).unwrap();
        let mut cfg = TrainConfig::new(Loss::Bce, 1, 0);
        assert!(train(model.clone(), &xor(), &cfg).is_err());
        cfg.batch_size = 2;
        cfg.adam_beta1 = 1.0;
        assert!(train(model.clone(), &xor(), &cfg).is_err());
        let wrong = Mlp::new(3, &[(1, Activation::Sigmoid)], 1).unwrap();
        assert!(train(wrong, &xor(), &TrainConfig::new(Loss::Bce, 1, 2)).is_err());
    }
}
