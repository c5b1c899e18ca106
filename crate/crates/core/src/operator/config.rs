use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Distance `d(y_t, y)` between a target and a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    #[default]
    L1,
    L2Squared,
}

impl Distance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(p, q)| match self {
                Distance::L1 => (p - q).abs(),
                Distance::L2Squared => (p - q) * (p - q),
            })
            .sum()
    }

    /// Differentiable distance from `prediction` (shape `[D]`) to `target`.
    pub fn on_tape(self, prediction: &Tensor, target: &[f64]) -> Result<Tensor> {
        if prediction.len() != target.len() {
            return Err(Error::LengthMismatch {
                expected: prediction.len(),
                got: target.len(),
            });
        }
        let t = prediction.tape().constant(&prediction.shape(), target.to_vec())?;
        let diff = prediction.sub(&t)?;
        match self {
            Distance::L1 => diff.abs()?.sum(),
            Distance::L2Squared => diff.square()?.sum(),
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distance::L1 => "l1",
            Distance::L2Squared => "l2-squared",
        })
    }
}

impl FromStr for Distance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Distance::L1),
            "l2-squared" | "l2sq" => Ok(Distance::L2Squared),
            other => Err(format!("unknown distance `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Anneal {
    #[default]
    Exponential,
    Linear,
}

impl FromStr for Anneal {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exponential" => Ok(Anneal::Exponential),
            "linear" => Ok(Anneal::Linear),
            other => Err(format!("unknown anneal schedule `{other}`")),
        }
    }
}

/// Sample count, temperature schedule and distance for the sampled loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub num_samples: usize,
    pub tau_start: f64,
    pub tau_end: f64,
    pub anneal: Anneal,
    pub distance: Distance,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            num_samples: 5,
            tau_start: 1.0,
            tau_end: 0.1,
            anneal: Anneal::Exponential,
            distance: Distance::L1,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::InvalidArgument("num_samples must be at least 1".into()));
        }
        for tau in [self.tau_start, self.tau_end] {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::NonPositiveTemperature(tau));
            }
        }
        if self.tau_end > self.tau_start {
            return Err(Error::InvalidArgument(format!(
                "tau_end {} exceeds tau_start {}",
                self.tau_end, self.tau_start
            )));
        }
        Ok(())
    }
}

/// Temperature at `step` of `total`.
pub fn anneal_tau(cfg: &SamplingConfig, step: usize, total: usize) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("annealing over zero steps".into()));
    }
    if step > total {
        return Err(Error::InvalidArgument(format!("step {step} beyond total {total}")));
    }
    if step == total {
        return Ok(cfg.tau_end);
    }
    let frac = step as f64 / total as f64;
    Ok(match cfg.anneal {
        Anneal::Exponential => cfg.tau_start * (cfg.tau_end / cfg.tau_start).powf(frac),
        Anneal::Linear => cfg.tau_start + (cfg.tau_end - cfg.tau_start) * frac,
    })
}

/// The loss families, with the regularisers' target variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    ErrorOfExpectation,
    DiscreteExpectedError,
    SampledExpectedError,
    VarianceRegularizer { sigma_t_sq: f64 },
    JsRegularizer { sigma_t_sq: f64 },
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::ErrorOfExpectation => "error-of-expectation",
            LossKind::DiscreteExpectedError => "discrete-expected-error",
            LossKind::SampledExpectedError => "sampled-expected-error",
            LossKind::VarianceRegularizer { .. } => "variance-regularizer",
            LossKind::JsRegularizer { .. } => "js-regularizer",
        }
    }

    /// All five kinds with the given regulariser target.
    pub fn all(sigma_t_sq: f64) -> [LossKind; 5] {
        [
            LossKind::ErrorOfExpectation,
            LossKind::DiscreteExpectedError,
            LossKind::SampledExpectedError,
            LossKind::VarianceRegularizer { sigma_t_sq },
            LossKind::JsRegularizer { sigma_t_sq },
        ]
    }
}
