use super::metrics::ClassifierMetrics;
use super::SplitDataset;
use crate::error::{Error, Result};
use crate::montecarlo::ConnectivityCheck;
use crate::network::{TopologyRealization, TransportNetwork};
use crate::neural::{train, Activation, Dataset, Loss, Mlp, TrainConfig};

/// Hidden widths of the default classifier.
pub const CLASSIFIER_HIDDEN: [usize; 7] = [64, 64, 32, 32, 16, 16, 8];
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Predicts two-terminal connectivity from a binary roadway-state vector.
#[derive(Debug, Clone)]
pub struct ClassifierSurrogate {
    model: Mlp,
    threshold: f64,
    pub metrics: Option<ClassifierMetrics>,
    pub history: Vec<f64>,
}

/// Layer plan: ReLU on every hidden layer but the last, which is sigmoid,
/// and a single sigmoid output unit.
pub fn classifier_layers(hidden: &[usize]) -> Vec<(usize, Activation)> {
    let mut layers: Vec<(usize, Activation)> =
        hidden.iter().map(|&u| (u, Activation::Relu)).collect();
    if let Some(last) = layers.last_mut() {
        last.1 = Activation::Sigmoid;
    }
    layers.push((1, Activation::Sigmoid));
    layers
}

impl ClassifierSurrogate {
    pub fn new(model: Mlp, threshold: f64) -> Result<Self> {
        if model.output_dim() != 1 || model.output_activation() != Activation::Sigmoid {
            return Err(Error::Validation(
                "classifier needs a single sigmoid output".into(),
            ));
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            model,
            threshold,
            metrics: None,
            history: Vec::new(),
        })
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} must lie in (0, 1)"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    /// Sigmoid output for one realization.
    pub fn probability(&self, topo: &TopologyRealization) -> Result<f64> {
        let x: Vec<f64> = topo.states().iter().map(|&s| s as f64).collect();
        Ok(self.model.forward(&x)?[0])
    }

    pub fn classify(&self, topo: &TopologyRealization) -> Result<bool> {
        Ok(self.decide(self.probability(topo)?))
    }

    #[inline]
    pub fn decide(&self, output: f64) -> bool {
        output >= self.threshold
    }

    /// Sigmoid outputs for `rows × input_dim` binary states.
    pub fn probabilities_batch(&self, states: &[u8]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if !states.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: states.len() % d,
            });
        }
        let rows = states.len() / d;
        let x: Vec<f64> = states.iter().map(|&s| s as f64).collect();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        self.model.forward_slice(&x, rows, &mut a, &mut b);
        Ok(a)
    }

    pub fn classify_batch(&self, states: &[u8]) -> Result<Vec<bool>> {
        Ok(self
            .probabilities_batch(states)?
            .into_iter()
            .map(|p| self.decide(p))
            .collect())
    }

    pub fn to_json(&self) -> String {
        self.model.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(Mlp::from_json(text)?, DEFAULT_THRESHOLD)
    }
}

impl ConnectivityCheck for ClassifierSurrogate {
    fn check_batch(
        &self,
        net: &TransportNetwork,
        states: &[u8],
        out: &mut Vec<bool>,
    ) -> Result<()> {
        if net.num_links() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: net.num_links(),
                actual: self.input_dim(),
            });
        }
        let probs = self.probabilities_batch(states)?;
        out.extend(probs.into_iter().map(|p| self.decide(p)));
        Ok(())
    }
}

/// Train a classifier with BCE loss and attach metrics on the held-out split.
pub fn train_classifier(
    data: &SplitDataset,
    hidden: &[usize],
    config: &TrainConfig,
    init_seed: u64,
) -> Result<ClassifierSurrogate> {
    if config.loss != Loss::Bce {
        return Err(Error::InvalidArgument(
            "the classifier is trained with BCE loss".into(),
        ));
    }
    if data.train.target_dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: data.train.target_dim(),
        });
    }
    let model = Mlp::new(
        data.train.input_dim(),
        &classifier_layers(hidden),
        init_seed,
    )?;
    let outcome = train(model, &data.train, config)?;
    let mut surrogate = ClassifierSurrogate::new(outcome.model, DEFAULT_THRESHOLD)?;
    surrogate.history = outcome.history;
    if !data.eval.is_empty() {
        surrogate.metrics = Some(eval_classifier(&surrogate, &data.eval)?);
    }
    Ok(surrogate)
}

/// Confusion counts of the surrogate against binary labels.
pub fn eval_classifier(
    surrogate: &ClassifierSurrogate,
    data: &Dataset,
) -> Result<ClassifierMetrics> {
    if data.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    if data.input_dim() != surrogate.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: surrogate.input_dim(),
            actual: data.input_dim(),
        });
    }
    let outputs = surrogate.model.forward_batch(&data.inputs)?;
    let labels = data.targets.as_slice();
    if let Some(y) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidArgument(format!("label {y} is not binary")));
    }
    ClassifierMetrics::from_pairs(
        outputs
            .as_slice()
            .iter()
            .zip(labels)
            .map(|(&p, &y)| (surrogate.decide(p), y == 1.0)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Layer;

    /// One input feeding a sigmoid unit with the given logit weight.
    fn fixed(logit_per_one: f64, bias: f64) -> ClassifierSurrogate {
        let layer = Layer::new(1, 1, vec![logit_per_one], vec![bias], Activation::Sigmoid).unwrap();
        ClassifierSurrogate::new(Mlp::from_layers(vec![layer]).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn thresholding() {
        // sigmoid(ln(0.93/0.07)) = 0.93, sigmoid(ln(0.12/0.88)) = 0.12
        let hi = fixed(0.0, (0.93f64 / 0.07).ln());
        let lo = fixed(0.0, (0.12f64 / 0.88).ln());
        let t = TopologyRealization::new(vec![1]).unwrap();
        assert!((hi.probability(&t).unwrap() - 0.93).abs() < 1e-12);
        assert!(hi.classify(&t).unwrap());
        assert!(!lo.classify(&t).unwrap());
    }

    #[test]
    fn rejects_bad_heads() {
        let relu = Mlp::new(3, &[(1, Activation::Relu)], 1).unwrap();
        assert!(ClassifierSurrogate::new(relu, 0.5).is_err());
        let ok = Mlp::new(3, &[(1, Activation::Sigmoid)], 1).unwrap();
        assert!(ClassifierSurrogate::new(ok.clone(), 1.0).is_err());
        assert!(ClassifierSurrogate::new(ok, 0.3).is_ok());
    }

    #[test]
    fn default_layer_plan() {
        let plan = classifier_layers(&CLASSIFIER_HIDDEN);
        assert_eq!(plan.len(), 8);
        assert!(plan[..6].iter().all(|&(_, a)| a == Activation::Relu));
        assert_eq!(plan[6], (8, Activation::Sigmoid));
        assert_eq!(plan[7], (1, Activation::Sigmoid));
    }

    #[test]
    fn batch_equals_rows() {
        let model = Mlp::new(6, &classifier_layers(&[8, 4]), 3).unwrap();
        let c = ClassifierSurrogate::new(model, 0.5).unwrap();
        let mut states = Vec::new();
        for j in 0..64u32 {
            states.extend((0..6).map(|i| (j >> i & 1) as u8));
        }
        let batch = c.classify_batch(&states).unwrap();
        for (row, &b) in states.chunks(6).zip(&batch) {
            let t = TopologyRealization::new(row.to_vec()).unwrap();
            assert_eq!(c.classify(&t).unwrap(), b);
        }
    }
}
