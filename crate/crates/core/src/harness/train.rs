use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::eval::evaluate;
use super::model::{Mlp, MlpParams};
use super::task::{Split, SyntheticTask, TaskKind};
use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::mixture::{draw_rng, Basis, MixtureSpec, ProbabilityMap};
use crate::operator::{
    anneal_tau, discrete_expected_error_loss, error_of_expectation_loss, js_regularizer,
    sampled_expected_error_loss, variance_regularizer, SamplingConfig,
};

const SHUFFLE_STREAM: u64 = 2;
const NOISE_STREAM: u64 = 3;

/// Training objective selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Error of the soft-argmax expectation.
    Soft,
    /// Expected error over the discrete support points.
    Discrete,
    /// Expected error over differentiable mixture samples.
    Samp,
    /// `Soft` plus the variance regulariser.
    SoftVr,
    /// `Soft` plus the Jensen–Shannon regulariser.
    SoftDr,
}

impl Objective {
    pub const ALL: [Objective; 5] = [
        Objective::Soft,
        Objective::Discrete,
        Objective::Samp,
        Objective::SoftVr,
        Objective::SoftDr,
    ];

    /// Regulariser weight used when none is configured.
    pub fn default_reg_weight(self) -> f64 {
        match self {
            Objective::SoftDr => 0.1,
            _ => 1.0,
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Soft => "soft",
            Objective::Discrete => "discrete",
            Objective::Samp => "samp",
            Objective::SoftVr => "soft-vr",
            Objective::SoftDr => "soft-dr",
        })
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Objective::ALL
            .into_iter()
            .find(|o| o.to_string() == s)
            .ok_or_else(|| format!("unknown loss `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: SyntheticTask,
    pub objective: Objective,
    pub basis: Basis,
    /// Gaussian basis standard deviation; defaults to the grid spacing.
    pub sigma: Option<f64>,
    pub sampling: SamplingConfig,
    pub sigma_t_sq: f64,
    /// Regulariser weight; `None` uses the objective's default.
    pub reg_weight: Option<f64>,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub hidden: usize,
    /// Seeds model initialisation, shuffling and sampling noise.
    pub seed: u64,
}

impl RunConfig {
    pub fn new(kind: TaskKind, objective: Objective, seed: u64) -> Self {
        Self {
            task: SyntheticTask::new(kind, 0.3, seed),
            objective,
            basis: match kind {
                TaskKind::Scatter3d => Basis::Gaussian,
                _ => Basis::Triangular,
            },
            sigma: None,
            sampling: SamplingConfig::default(),
            sigma_t_sq: 4.0,
            reg_weight: None,
            lr: 0.1,
            epochs: 40,
            batch: 16,
            hidden: 64,
            seed,
        }
    }

    pub fn mixture_spec(&self) -> MixtureSpec {
        MixtureSpec {
            basis: self.basis,
            sigma: match (self.basis, self.task.kind) {
                (Basis::Gaussian, TaskKind::Scatter3d) => {
                    Some(self.sigma.unwrap_or_else(|| self.task.cell()))
                }
                _ => self.sigma,
            },
        }
    }

    pub fn reg_weight(&self) -> f64 {
        self.reg_weight
            .unwrap_or_else(|| self.objective.default_reg_weight())
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        let invalid = |msg: String| Err(Error::InvalidArgument(msg));
        if self.epochs == 0 || self.batch == 0 || self.hidden == 0 {
            return invalid("epochs, batch and hidden must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return invalid(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(self.sigma_t_sq > 0.0 && self.sigma_t_sq.is_finite()) {
            return invalid(format!("sigma_t_sq must be positive, got {}", self.sigma_t_sq));
        }
        let w = self.reg_weight();
        if !(w >= 0.0 && w.is_finite()) {
            return invalid(format!("regulariser weight must be non-negative, got {w}"));
        }
        if !(self.task.noise >= 0.0 && self.task.noise.is_finite()) {
            return invalid(format!("noise must be non-negative, got {}", self.task.noise));
        }
        if self.task.train == 0 {
            return Err(Error::EmptySplit("train".into()));
        }
        if self.objective == Objective::Samp {
            self.mixture_spec().width(&*self.task.support()?)?;
        }
        Ok(())
    }

    /// Temperature used during `epoch` (zero-based).
    pub fn tau_at(&self, epoch: usize) -> Result<f64> {
        anneal_tau(&self.sampling, epoch, self.epochs.saturating_sub(1).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_mean_err: f64,
    pub tau: f64,
}

/// Loss of one example under the configured objective.
fn example_loss<R: rand::Rng>(
    cfg: &RunConfig,
    spec: &MixtureSpec,
    map: &ProbabilityMap,
    target: &[f64],
    tau: f64,
    rng: &mut R,
) -> Result<Tensor> {
    let distance = cfg.sampling.distance;
    match cfg.objective {
        Objective::Soft => error_of_expectation_loss(map, target, distance),
        Objective::Discrete => discrete_expected_error_loss(map, target, distance),
        Objective::Samp => sampled_expected_error_loss(map, spec, target, &cfg.sampling, tau, rng),
        Objective::SoftVr => error_of_expectation_loss(map, target, distance)?
            .add(&variance_regularizer(map, cfg.sigma_t_sq)?.scale(cfg.reg_weight())?),
        Objective::SoftDr => error_of_expectation_loss(map, target, distance)?
            .add(&js_regularizer(map, cfg.sigma_t_sq)?.scale(cfg.reg_weight())?),
    }
}

fn diverged(epoch: usize, err: Error) -> Error {
    match err {
        Error::NonFinite(op) => Error::Divergence {
            epoch,
            detail: format!("non-finite value in {op}"),
        },
        other => other,
    }
}

/// Trains a fresh model with plain SGD, recording one row per epoch.
pub fn train(cfg: &RunConfig) -> Result<(Mlp, Vec<EpochRecord>)> {
    cfg.validate()?;
    let support = cfg.task.support()?;
    let spec = cfg.mixture_spec();
    let train_set = cfg.task.examples(Split::Train);
    let input = cfg.task.observation_len();
    let n = support.len();
    let mut model = Mlp::new(input, cfg.hidden, n, cfg.seed);
    let mut shuffle_rng = draw_rng(cfg.seed, SHUFFLE_STREAM);
    let mut noise_rng = draw_rng(cfg.seed, NOISE_STREAM);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let tau = cfg.tau_at(epoch)?;
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch) {
            let mut step = || -> Result<(f64, MlpParams)> {
                let tape = Tape::new();
                let params = model.params(&tape, true)?;
                let obs: Vec<f64> = batch
                    .iter()
                    .flat_map(|&i| train_set[i].observation.iter().copied())
                    .collect();
                let obs = tape.constant(&[batch.len(), input], obs)?;
                let probs = model.logits(&params, &obs)?.softmax(1)?;
                let mut loss: Option<Tensor> = None;
                for (row, &i) in batch.iter().enumerate() {
                    let weights = probs.index_select(0, &[row])?.reshape(&[n])?;
                    let map = ProbabilityMap::new(support.clone(), weights)?;
                    let l = example_loss(cfg, &spec, &map, &train_set[i].target, tau, &mut noise_rng)?;
                    loss = Some(match loss {
                        Some(acc) => acc.add(&l)?,
                        None => l,
                    });
                }
                let loss = loss.expect("non-empty batch").scale(1.0 / batch.len() as f64)?;
                let value = loss.item();
                if !value.is_finite() {
                    return Err(Error::NonFinite("loss"));
                }
                loss.backward()?;
                Ok((value, params))
            };
            let (value, params) = step().map_err(|e| diverged(epoch, e))?;
            model.sgd_step(&params, cfg.lr);
            total += value * batch.len() as f64;
        }
        let val_mean_err = if cfg.task.val == 0 {
            f64::NAN
        } else {
            evaluate(&model, &cfg.task, Split::Val)?.summary.mean_err
        };
        history.push(EpochRecord {
            epoch,
            loss: total / train_set.len() as f64,
            val_mean_err,
            tau,
        });
    }
    Ok((model, history))
}
