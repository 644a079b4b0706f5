use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Predictions are clamped into `[BCE_EPS, 1 - BCE_EPS]` before taking logs.
pub const BCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// `(1 / 2M) Σ_i ‖y_i − ŷ_i‖²`
    Mse,
    /// `−Σ_i [y_i ln ŷ_i + (1 − y_i) ln(1 − ŷ_i)]`
    Bce,
}

impl Loss {
    pub fn evaluate(self, pred: &Matrix, target: &Matrix) -> Result<f64> {
        match self {
            Loss::Mse => loss_mse(pred, target),
            Loss::Bce => loss_bce(pred, target),
        }
    }
}

pub fn loss_mse(pred: &Matrix, target: &Matrix) -> Result<f64> {
    pred.same_shape(target)?;
    if pred.rows() == 0 {
        return Err(Error::InvalidArgument("loss over an empty batch".into()));
    }
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, y)| (y - p) * (y - p))
        .sum();
    Ok(sum / (2.0 * pred.rows() as f64))
}

pub fn loss_bce(pred: &Matrix, target: &Matrix) -> Result<f64> {
    pred.same_shape(target)?;
    let mut total = 0.0;
    for (&p, &y) in pred.as_slice().iter().zip(target.as_slice()) {
        if y != 0.0 && y != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "binary target must be 0 or 1, got {y}"
            )));
        }
        total += bce_term(p, y);
    }
    Ok(total)
}

#[inline]
pub(crate) fn bce_term(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn mse_cases() {
        let a = m(&[vec![0.3, 0.1], vec![2.0, -1.0]]);
        assert_eq!(loss_mse(&a, &a).unwrap(), 0.0);
        assert_eq!(loss_mse(&m(&[vec![0.0]]), &m(&[vec![1.0]])).unwrap(), 0.5);
        let pred = m(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let zero = m(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(loss_mse(&pred, &zero).unwrap(), 1.25);
        assert!(loss_mse(&pred, &m(&[vec![0.0, 0.0]])).is_err());
    }

    #[test]
    fn bce_cases() {
        let one = m(&[vec![1.0]]);
        assert!(loss_bce(&m(&[vec![1.0 - BCE_EPS]]), &one).unwrap() < 1e-11);
        assert!((loss_bce(&m(&[vec![0.5]]), &one).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let v = loss_bce(&m(&[vec![0.9]]), &m(&[vec![0.0]])).unwrap();
        assert!((v - 10f64.ln()).abs() < 1e-12);
        // clamped: finite even at the boundary
        assert!(loss_bce(&m(&[vec![0.0]]), &one).unwrap().is_finite());
        assert!(loss_bce(&m(&[vec![0.5]]), &m(&[vec![0.5]])).is_err());
    }
}
