//! Dense feed-forward networks loaded from a JSON weight file (inference only).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InputRanges, NormalizedInput};
use crate::error::{Error, Result};

pub const WEIGHT_FORMAT: &str = "ftpellet-mlp";
pub const WEIGHT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Gelu,
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Gelu => 0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2)),
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Linear => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major, `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub format: String,
    pub version: u32,
    pub layer_count: usize,
    #[serde(default)]
    pub input_ranges: Option<InputRanges>,
    pub layers: Vec<Layer>,
}

impl WeightFile {
    pub fn validate(&self) -> Result<()> {
        if self.format != WEIGHT_FORMAT {
            return Err(Error::Schema(format!(
                "format is {:?}, expected {WEIGHT_FORMAT:?}",
                self.format
            )));
        }
        if self.version != WEIGHT_VERSION {
            return Err(Error::Schema(format!("unsupported version {}", self.version)));
        }
        if self.layers.is_empty() || self.layers.len() != self.layer_count {
            return Err(Error::Schema(format!(
                "layer_count {} but {} layers present",
                self.layer_count,
                self.layers.len()
            )));
        }
        if self.layers[0].inputs != 4 {
            return Err(Error::Schema(format!(
                "first layer takes {} inputs, expected 4",
                self.layers[0].inputs
            )));
        }
        let last = self.layers.last().map(|l| l.outputs).unwrap_or(0);
        if last != 1 {
            return Err(Error::Schema(format!("last layer has {last} outputs, expected 1")));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs {
                return Err(Error::Schema(format!(
                    "layer {i}: {} weights for a {}x{} matrix",
                    layer.weights.len(),
                    layer.outputs,
                    layer.inputs
                )));
            }
            if layer.bias.len() != layer.outputs {
                return Err(Error::Schema(format!(
                    "layer {i}: {} biases for {} outputs",
                    layer.bias.len(),
                    layer.outputs
                )));
            }
            if i > 0 && self.layers[i - 1].outputs != layer.inputs {
                return Err(Error::Schema(format!(
                    "layer {i} takes {} inputs but layer {} emits {}",
                    layer.inputs,
                    i - 1,
                    self.layers[i - 1].outputs
                )));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("layer {i}: non-finite value")));
            }
        }
        Ok(())
    }
}

/// A validated network. Output passes through a final rectifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    file: WeightFile,
}

impl Network {
    pub fn new(file: WeightFile) -> Result<Self> {
        file.validate()?;
        Ok(Self { file })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<weights>".into(),
            message: e.to_string(),
        })?;
        Self::new(file)
    }

    pub fn weight_file(&self) -> &WeightFile {
        &self.file
    }

    pub fn input_ranges(&self) -> InputRanges {
        self.file.input_ranges.unwrap_or_default()
    }

    pub fn infer(&self, input: &NormalizedInput) -> f64 {
        let mut x = input.as_array().to_vec();
        for layer in &self.file.layers {
            let mut out = layer.bias.clone();
            for (o, row) in out.iter_mut().zip(layer.weights.chunks_exact(layer.inputs)) {
                *o += row.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>();
                *o = layer.activation.apply(*o);
            }
            x = out;
        }
        x[0].max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input() -> NormalizedInput {
        NormalizedInput {
            x_co: 0.2,
            x_h2: 0.4,
            x_h2o: 0.1,
            x_t: 0.5,
        }
    }

    fn file(layers: Vec<Layer>) -> WeightFile {
        WeightFile {
            format: WEIGHT_FORMAT.into(),
            version: WEIGHT_VERSION,
            layer_count: layers.len(),
            input_ranges: None,
            layers,
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::new(file(vec![
            Layer {
                inputs: 4,
                outputs: 3,
                weights: vec![0.0; 12],
                bias: vec![0.0; 3],
                activation: Activation::Gelu,
            },
            Layer {
                inputs: 3,
                outputs: 1,
                weights: vec![0.0; 3],
                bias: vec![0.0],
                activation: Activation::Linear,
            },
        ]))
        .unwrap();
        assert_eq!(net.infer(&input()), 0.0);
    }

    #[test]
    fn hand_evaluated_two_layer() {
        // hidden = gelu([x_co + x_h2, x_h2o - x_t]); y = 2 h0 - h1 + 0.1
        let net = Network::new(file(vec![
            Layer {
                inputs: 4,
                outputs: 2,
                weights: vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0],
                bias: vec![0.0, 0.0],
                activation: Activation::Gelu,
            },
            Layer {
                inputs: 2,
                outputs: 1,
                weights: vec![2.0, -1.0],
                bias: vec![0.1],
                activation: Activation::Linear,
            },
        ]))
        .unwrap();
        let gelu = |x: f64| 0.5 * x * (1.0 + libm::erf(x / 2f64.sqrt()));
        let expected = 2.0 * gelu(0.6) - gelu(-0.4) + 0.1;
        assert!((net.infer(&input()) - expected).abs() < 1e-15);
    }

    #[test]
    fn final_rectifier_clips() {
        let net = Network::new(file(vec![Layer {
            inputs: 4,
            outputs: 1,
            weights: vec![0.0; 4],
            bias: vec![-3.0],
            activation: Activation::Linear,
        }]))
        .unwrap();
        assert_eq!(net.infer(&input()), 0.0);
    }

    #[test]
    fn gelu_passes_zero() {
        assert_eq!(Activation::Gelu.apply(0.0), 0.0);
        assert!((Activation::Gelu.apply(1.0) - 0.8413447460685429).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_schema_error() {
        let bad = file(vec![Layer {
            inputs: 4,
            outputs: 1,
            weights: vec![0.0; 3],
            bias: vec![0.0],
            activation: Activation::Linear,
        }]);
        assert!(matches!(Network::new(bad), Err(Error::Schema(_))));
    }

    #[test]
    fn json_round_trip() {
        let f = file(vec![Layer {
            inputs: 4,
            outputs: 1,
            weights: vec![0.5, 0.25, 0.0, -1.0],
            bias: vec![0.3],
            activation: Activation::Tanh,
        }]);
        let text = serde_json::to_string(&f).unwrap();
        let net = Network::from_json(&text).unwrap();
        assert_eq!(net.weight_file(), &f);
    }
}
