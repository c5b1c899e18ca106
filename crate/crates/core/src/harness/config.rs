//! Flat TOML configuration mirroring the command-line flags.
//!
//! ```toml
//! task = "signal1d"
//! loss = "samp"
//! basis = "triangular"
//! num-samples = 5
//! epochs = 30
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use super::task::TaskKind;
use super::train::{Objective, RunConfig};
use crate::mixture::Basis;
use crate::operator::{Anneal, Distance};

/// Every field optional; unset fields keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConfigPatch {
    pub task: Option<TaskKind>,
    pub loss: Option<Objective>,
    pub basis: Option<Basis>,
    pub sigma: Option<f64>,
    pub num_samples: Option<usize>,
    pub tau_start: Option<f64>,
    pub tau_end: Option<f64>,
    pub anneal: Option<Anneal>,
    pub distance: Option<Distance>,
    pub sigma_t_sq: Option<f64>,
    pub reg_weight: Option<f64>,
    pub epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lr: Option<f64>,
    pub hidden: Option<usize>,
    pub noise: Option<f64>,
    pub size: Option<usize>,
    pub train: Option<usize>,
    pub val: Option<usize>,
    pub test: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub draws: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ConfigPatch {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Fields set in `over` win.
    pub fn merged(self, over: ConfigPatch) -> ConfigPatch {
        macro_rules! pick {
            ($($f:ident),*) => {
                ConfigPatch { $($f: over.$f.or(self.$f)),* }
            };
        }
        pick!(
            task, loss, basis, sigma, num_samples, tau_start, tau_end, anneal, distance,
            sigma_t_sq, reg_weight, epochs, batch, lr, hidden, noise, size, train, val, test,
            seed, seeds, draws, out
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Run configuration for `seed` with this patch applied to the defaults.
    pub fn run_config(&self, seed: u64) -> RunConfig {
        let kind = self.task.unwrap_or(TaskKind::Signal1d);
        let mut cfg = RunConfig::new(kind, self.loss.unwrap_or(Objective::Soft), seed);
        let task = &mut cfg.task;
        if let Some(v) = self.noise {
            task.noise = v;
        }
        if let Some(v) = self.size {
            task.size = v;
        }
        if let Some(v) = self.train {
            task.train = v;
        }
        if let Some(v) = self.val {
            task.val = v;
        }
        if let Some(v) = self.test {
            task.test = v;
        }
        let s = &mut cfg.sampling;
        if let Some(v) = self.num_samples {
            s.num_samples = v;
        }
        if let Some(v) = self.tau_start {
            s.tau_start = v;
        }
        if let Some(v) = self.tau_end {
            s.tau_end = v;
        }
        if let Some(v) = self.anneal {
            s.anneal = v;
        }
        if let Some(v) = self.distance {
            s.distance = v;
        }
        if let Some(v) = self.basis {
            cfg.basis = v;
        }
        cfg.sigma = self.sigma.or(cfg.sigma);
        cfg.reg_weight = self.reg_weight.or(cfg.reg_weight);
        if let Some(v) = self.sigma_t_sq {
            cfg.sigma_t_sq = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.batch {
            cfg.batch = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.hidden {
            cfg.hidden = v;
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kebab_case_keys() {
        let p = ConfigPatch::from_toml(
            "task = \"heat2d\"\nloss = \"soft-vr\"\nnum-samples = 3\ntau-end = 0.2\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(p.task, Some(TaskKind::Heat2d));
        assert_eq!(p.loss, Some(Objective::SoftVr));
        let cfg = p.run_config(p.seed());
        assert_eq!(cfg.sampling.num_samples, 3);
        assert_eq!(cfg.sampling.tau_end, 0.2);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn rejects_unknown_keys_and_values() {
        assert!(ConfigPatch::from_toml("learning-rate = 0.1").is_err());
        assert!(ConfigPatch::from_toml("task = \"cube\"").is_err());
    }

    #[test]
    fn later_patch_wins() {
        let file = ConfigPatch {
            epochs: Some(5),
            lr: Some(0.1),
            ..Default::default()
        };
        let flags = ConfigPatch {
            epochs: Some(7),
            ..Default::default()
        };
        let m = file.merged(flags);
        assert_eq!((m.epochs, m.lr), (Some(7), Some(0.1)));
    }
}
