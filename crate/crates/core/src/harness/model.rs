use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::mixture::{draw_rng, ProbabilityMap, Support};
use crate::operator::inference_localize;

const INIT_STREAM: u64 = 1;

/// Two-layer perceptron: observation -> relu hidden -> logits over the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// The parameters placed on a tape for one forward pass.
pub struct MlpParams {
    pub w1: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn new(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = draw_rng(seed, INIT_STREAM);
        let mut layer = |fan_in: usize, fan_out: usize| -> Vec<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect()
        };
        let w1 = layer(input, hidden);
        let w2 = layer(hidden, output);
        Self {
            input,
            hidden,
            output,
            w1,
            b1: vec![0.0; hidden],
            w2,
            b2: vec![0.0; output],
        }
    }

    pub fn params(&self, tape: &Tape, trainable: bool) -> Result<MlpParams> {
        Ok(MlpParams {
            w1: tape.leaf(&[self.input, self.hidden], self.w1.clone(), trainable)?,
            b1: tape.leaf(&[self.hidden], self.b1.clone(), trainable)?,
            w2: tape.leaf(&[self.hidden, self.output], self.w2.clone(), trainable)?,
            b2: tape.leaf(&[self.output], self.b2.clone(), trainable)?,
        })
    }

    /// Logits `[batch, output]` for observations `[batch, input]`.
    pub fn logits(&self, params: &MlpParams, observations: &Tensor) -> Result<Tensor> {
        observations
            .matmul(&params.w1)?
            .add(&params.b1)?
            .relu()?
            .matmul(&params.w2)?
            .add(&params.b2)
    }

    /// Plain SGD using the gradients accumulated on `params`.
    pub fn sgd_step(&mut self, params: &MlpParams, lr: f64) {
        for (values, tensor) in [
            (&mut self.w1, &params.w1),
            (&mut self.b1, &params.b1),
            (&mut self.w2, &params.w2),
            (&mut self.b2, &params.b2),
        ] {
            if let Some(g) = tensor.grad() {
                values.iter_mut().zip(g).for_each(|(v, g)| *v -= lr * g);
            }
        }
    }

    /// Deterministic test-time prediction: `(weights, localised point)`.
    pub fn predict(&self, support: &std::sync::Arc<Support>, observation: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if observation.len() != self.input {
            return Err(Error::LengthMismatch {
                expected: self.input,
                got: observation.len(),
            });
        }
        let tape = Tape::new();
        let params = self.params(&tape, false)?;
        let obs = tape.constant(&[1, self.input], observation.to_vec())?;
        let logits = self.logits(&params, &obs)?.reshape(&[self.output])?;
        let map = ProbabilityMap::from_logits(support.clone(), &logits)?;
        let point = inference_localize(&map)?;
        Ok((map.weight_values(), point))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
