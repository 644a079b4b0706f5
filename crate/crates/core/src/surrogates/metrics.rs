use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts and rates of a binary connectivity classifier.
/// Positive means "source and terminal connected".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub alpha_binary: f64,
    /// `None` when there are no positive examples.
    pub tpr: Option<f64>,
    /// `None` when there are no negative examples.
    pub tnr: Option<f64>,
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ClassifierMetrics {
    pub fn from_counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> Result<Self> {
        let n = tp + tn + fp + fn_;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "metrics over an empty dataset".into(),
            ));
        }
        let ratio = |a: u64, b: u64| (a + b > 0).then(|| a as f64 / (a + b) as f64);
        Ok(Self {
            alpha_binary: (tp + tn) as f64 / n as f64,
            tpr: ratio(tp, fn_),
            tnr: ratio(tn, fp),
            tp,
            tn,
            fp,
            fn_,
        })
    }

    /// Tally predictions against labels.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Result<Self> {
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        for (predicted, actual) in pairs {
            match (predicted, actual) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, tn, fp, fn_)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

/// `1 − |P_ref − P_sur| / P_ref`. Negative for gross errors.
pub fn qoi_accuracy(pc_ref: f64, pc_sur: f64) -> Result<f64> {
    if pc_ref == 0.0 || !pc_ref.is_finite() || !pc_sur.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "QoI accuracy needs a finite nonzero reference, got {pc_ref}"
        )));
    }
    Ok(1.0 - (pc_ref - pc_sur).abs() / pc_ref)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoiMetrics {
    pub alpha_qoi: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas() {
        let m = ClassifierMetrics::from_counts(8, 1, 0, 1).unwrap();
        assert!((m.alpha_binary - 0.9).abs() < 1e-15);
        assert!((m.tpr.unwrap() - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(m.tnr, Some(1.0));
        assert_eq!(m.total(), 10);
    }

    #[test]
    fn all_correct() {
        let m =
            ClassifierMetrics::from_pairs([(true, true), (false, false), (true, true)]).unwrap();
        assert_eq!((m.alpha_binary, m.tpr, m.tnr), (1.0, Some(1.0), Some(1.0)));
    }

    #[test]
    fn undefined_rates_and_empty() {
        let m = ClassifierMetrics::from_counts(3, 0, 0, 0).unwrap();
        assert_eq!(m.tnr, None);
        assert!(ClassifierMetrics::from_counts(0, 0, 0, 0).is_err());
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        for key in ["alpha_binary", "tpr", "tnr", "tp", "tn", "fp", "fn"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn qoi() {
        assert_eq!(qoi_accuracy(0.8, 0.8).unwrap(), 1.0);
        assert!((qoi_accuracy(0.8, 0.76).unwrap() - 0.95).abs() < 1e-12);
        assert!((qoi_accuracy(0.8635, 0.8633).unwrap() - 0.99977).abs() < 5e-6);
        assert!(qoi_accuracy(0.1, 0.5).unwrap() < 0.0);
        assert!(qoi_accuracy(0.0, 0.5).is_err());
    }
}
