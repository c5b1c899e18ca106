//! Seeded synthetic localisation tasks.
//!
//! Every task draws a continuous target, renders an observation around it
//! with an asymmetric bump, and corrupts it with per-example (heteroscedastic)
//! noise plus a noise-scaled distractor bump. With zero noise the observation
//! peaks at the grid point nearest the target.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mixture::{squared_distance, Support};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    #[serde(rename = "signal1d")]
    Signal1d,
    #[serde(rename = "heat2d")]
    Heat2d,
    #[serde(rename = "scatter3d")]
    Scatter3d,
}

impl TaskKind {
    pub fn default_size(self) -> usize {
        match self {
            TaskKind::Signal1d => 32,
            TaskKind::Heat2d => 12,
            TaskKind::Scatter3d => 256,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Signal1d => "signal1d",
            TaskKind::Heat2d => "heat2d",
            TaskKind::Scatter3d => "scatter3d",
        })
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "signal1d" => Ok(TaskKind::Signal1d),
            "heat2d" => Ok(TaskKind::Heat2d),
            "scatter3d" => Ok(TaskKind::Scatter3d),
            other => Err(format!("unknown task kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn tag(self) -> u8 {
        match self {
            Split::Train => 1,
            Split::Val => 2,
            Split::Test => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub observation: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub kind: TaskKind,
    /// Grid length (1-D), grid side (2-D) or point count (3-D).
    pub size: usize,
    pub noise: f64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub seed: u64,
}

/// Per-example bump parameters.
struct Bump {
    width: f64,
    left_tail: f64,
    right_tail: f64,
}

impl Bump {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            width: rng.random_range(0.6..1.2),
            left_tail: rng.random_range(0.3..3.0),
            right_tail: rng.random_range(0.3..3.0),
        }
    }

    /// Symmetric within one cell of the centre, side-dependent exponential
    /// tails beyond it; strictly decreasing in `|offset|` on each side.
    fn eval(&self, offset: f64) -> f64 {
        let a = offset.abs();
        let inv = 1.0 / (2.0 * self.width * self.width);
        if a <= 1.0 {
            (-a * a * inv).exp()
        } else {
            let tail = if offset < 0.0 { self.left_tail } else { self.right_tail };
            (-inv).exp() * (-(a - 1.0) / tail).exp()
        }
    }
}

/// Evenly spread points on the unit sphere (Fibonacci lattice).
pub fn fibonacci_sphere(n: usize) -> Vec<f64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * i as f64;
        out.extend([r * phi.cos(), r * phi.sin(), z]);
    }
    out
}

impl SyntheticTask {
    pub fn new(kind: TaskKind, noise: f64, seed: u64) -> Self {
        Self {
            kind,
            size: kind.default_size(),
            noise,
            train: 4096,
            val: 256,
            test: 1000,
            seed,
        }
    }

    pub fn support(&self) -> Result<Arc<Support>> {
        let s = match self.kind {
            TaskKind::Signal1d => Support::grid_1d(self.size, 1.0)?,
            TaskKind::Heat2d => Support::grid(&[self.size, self.size], 1.0)?,
            TaskKind::Scatter3d => {
                Support::scattered(3, fibonacci_sphere(self.size), vec![(-1.0, 1.0); 3])?
            }
        };
        Ok(Arc::new(s))
    }

    pub fn observation_len(&self) -> usize {
        match self.kind {
            TaskKind::Signal1d | TaskKind::Scatter3d => self.size,
            TaskKind::Heat2d => self.size * self.size,
        }
    }

    /// Spacing that counts as "one cell" when scoring.
    pub fn cell(&self) -> f64 {
        match self.kind {
            TaskKind::Signal1d | TaskKind::Heat2d => 1.0,
            TaskKind::Scatter3d => self
                .support()
                .map(|s| s.mean_neighbor_distance())
                .unwrap_or(1.0),
        }
    }

    pub fn count(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    fn rng(&self, split: Split, index: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8] = split.tag();
        key[9..16].copy_from_slice(b"synthtk");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(index as u64);
        rng
    }

    /// Example `index` of `split`; identical for identical inputs.
    pub fn example(&self, split: Split, index: usize) -> Example {
        let mut rng = self.rng(split, index);
        match self.kind {
            TaskKind::Signal1d => self.signal(&mut rng),
            TaskKind::Heat2d => self.heatmap(&mut rng),
            TaskKind::Scatter3d => self.scatter(&mut rng),
        }
    }

    pub fn examples(&self, split: Split) -> Vec<Example> {
        (0..self.count(split)).map(|i| self.example(split, i)).collect()
    }

    /// Noise std and distractor amplitude for one example.
    fn corruption(&self, rng: &mut ChaCha8Rng, amp: f64) -> (f64, f64) {
        let difficulty: f64 = rng.random();
        let std = self.noise * (0.2 + 1.8 * difficulty);
        let distractor = (amp * self.noise * difficulty).min(0.8 * amp);
        (std, distractor)
    }

    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    fn signal(&self, rng: &mut ChaCha8Rng) -> Example {
        let n = self.size;
        let hi = (n - 1) as f64;
        let target = rng.random_range(0.0..=hi);
        let amp = rng.random_range(0.7..1.3);
        let bump = Bump::random(rng);
        let (std, distractor_amp) = self.corruption(rng, amp);
        let decoy_at = rng.random_range(0.0..=hi);
        let decoy = Bump::random(rng);
        let observation = (0..n)
            .map(|j| {
                let x = j as f64;
                amp * bump.eval(x - target)
                    + distractor_amp * decoy.eval(x - decoy_at)
                    + std * Self::gaussian(rng)
            })
            .collect();
        Example {
            observation,
            target: vec![target],
        }
    }

    fn heatmap(&self, rng: &mut ChaCha8Rng) -> Example {
        let n = self.size;
        let hi = (n - 1) as f64;
        let target = [rng.random_range(0.0..=hi), rng.random_range(0.0..=hi)];
        let amp = rng.random_range(0.7..1.3);
        let bumps = [Bump::random(rng), Bump::random(rng)];
        let (std, distractor_amp) = self.corruption(rng, amp);
        let decoy_at = [rng.random_range(0.0..=hi), rng.random_range(0.0..=hi)];
        let decoy = Bump::random(rng);
        let mut observation = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let (y, x) = (r as f64, c as f64);
                let main = bumps[0].eval(y - target[0]) * bumps[1].eval(x - target[1]);
                let other = decoy.eval(y - decoy_at[0]) * decoy.eval(x - decoy_at[1]);
                observation.push(amp * main + distractor_amp * other + std * Self::gaussian(rng));
            }
        }
        Example {
            observation,
            target: target.to_vec(),
        }
    }

    fn scatter(&self, rng: &mut ChaCha8Rng) -> Example {
        let points = fibonacci_sphere(self.size);
        let cell = (4.0 * std::f64::consts::PI / self.size as f64).sqrt();
        let pick = |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(0..self.size);
            let mut v: Vec<f64> = (0..3)
                .map(|a| points[3 * k + a] + 0.5 * cell * Self::gaussian(rng))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        };
        let target = pick(rng);
        let amp = rng.random_range(0.7..1.3);
        let width = rng.random_range(1.0..2.0) * cell;
        let (std, distractor_amp) = self.corruption(rng, amp);
        let decoy = pick(rng);
        let inv = 1.0 / (2.0 * width * width);
        let observation = (0..self.size)
            .map(|j| {
                let p = &points[3 * j..3 * j + 3];
                amp * (-squared_distance(p, &target) * inv).exp()
                    + distractor_amp * (-squared_distance(p, &decoy) * inv).exp()
                    + std * Self::gaussian(rng)
            })
            .collect();
        Example { observation, target }
    }
}
