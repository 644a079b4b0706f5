//! Neural surrogates for the connectivity pipeline: a per-realization
//! classifier that stands in for the DFS check, and an end-to-end regressor
//! from roadway survival probabilities to expected connectivity. Also dataset
//! generation, accuracy metrics and one-at-a-time retrofit sensitivity.
//!
//! Inputs use survival encoding throughout: state 1 / probability of 1 means
//! the roadway is open.

mod classifier;
mod data;
mod e2e;
mod metrics;
mod sensitivity;

pub use classifier::{
    classifier_layers, eval_classifier, train_classifier, ClassifierSurrogate, CLASSIFIER_HIDDEN,
    DEFAULT_THRESHOLD,
};
pub use data::{
    generate_classifier_dataset, generate_e2e_dataset, split_dataset, ClassifierDataConfig,
    E2eDataConfig, SplitDataset, TRAIN_FRACTION,
};
pub use e2e::{
    e2e_layers, predict_e2e, train_e2e, E2eMetrics, EndToEndSurrogate, E2E_HIDDEN, E2E_LR_FINAL,
};
pub use metrics::{qoi_accuracy, ClassifierMetrics, QoiMetrics};
pub use sensitivity::{
    amplify, oat_sensitivity, ranking_csv, OatEstimator, OatReport, OatSettings, SensitivityEntry,
};
