//! Model file: `{"layers":[{"activation":..,"weights":[[..]..],"bias":[..]}..]}`
//! with weights as `in_dim` rows of `out_dim` columns.

use serde::{Deserialize, Serialize};

use super::{Activation, Layer, Mlp};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct LayerFile {
    activation: Activation,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    layers: Vec<LayerFile>,
}

impl Mlp {
    /// Floats are written in shortest round-trip form, so save → load is exact.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            layers: self
                .layers()
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation(),
                    weights: l
                        .weights()
                        .chunks(l.out_dim())
                        .map(<[f64]>::to_vec)
                        .collect(),
                    bias: l.bias().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        let layers = file
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, lf)| {
                let in_dim = lf.weights.len();
                let out_dim = lf.bias.len();
                if let Some(r) = lf.weights.iter().position(|row| row.len() != out_dim) {
                    return Err(Error::Validation(format!(
                        "layer {i}: weight row {r} has {} columns but bias has {out_dim}",
                        lf.weights[r].len()
                    )));
                }
                Layer::new(in_dim, out_dim, lf.weights.concat(), lf.bias, lf.activation)
                    .map_err(|e| Error::Validation(format!("layer {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Mlp::from_layers(layers)
    }
}

pub fn save_model(model: &Mlp) -> String {
    model.to_json()
}

pub fn load_model(text: &str) -> Result<Mlp> {
    Mlp::from_json(text)
}
