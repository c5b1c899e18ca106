//! Gradient variance of the score-function estimator versus the
//! reparameterised sampled loss, on fixed random 1-D maps.
//!
//! Both estimators target the gradient of the expected ℓ1 error with respect
//! to the logits, using one draw per estimate.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::report::{fmt_f64, fmt_pass, Table};
use crate::autodiff::Tape;
use crate::error::Result;
use crate::exec::Execution;
use crate::mixture::{draw_rng, gumbel_argmax, MixtureSpec, NoiseDraw, ProbabilityMap, Support};
use crate::operator::{sampled_expected_error_with_noise, Distance};

pub const BINS: usize = 16;
pub const SEEDS: u64 = 10;
pub const DRAWS: usize = 10_000;
/// Relaxation temperature of the reparameterised estimator: the start of
/// the default annealing schedule.
pub const TAU: f64 = 1.0;
/// Fraction of coordinates on which SF variance should exceed RP variance.
pub const COORD_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy)]
pub struct VarParams {
    pub seeds: u64,
    pub draws: usize,
    pub tau: f64,
    /// First seed; seed `s` fixes the map and target.
    pub base_seed: u64,
    /// Selects an independent noise stream for the same maps.
    pub repeat: u64,
}

impl Default for VarParams {
    fn default() -> Self {
        Self {
            seeds: SEEDS,
            draws: DRAWS,
            tau: TAU,
            base_seed: 0,
            repeat: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarRow {
    pub seed: u64,
    pub sf_trace: f64,
    pub rp_trace: f64,
    pub ratio: f64,
    /// Fraction of coordinates with larger SF variance.
    pub coord_fraction: f64,
    pub coord_passed: bool,
    /// `ratio > 1`.
    pub passed: bool,
}

/// Per-coordinate sample variance of a list of gradient vectors.
fn coordinate_variance(grads: &[Vec<f64>]) -> Vec<f64> {
    let n = grads.len() as f64;
    let dim = grads[0].len();
    (0..dim)
        .map(|j| {
            let mean = grads.iter().map(|g| g[j]).sum::<f64>() / n;
            grads.iter().map(|g| (g[j] - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect()
}

/// `d(y_t, y_i) ∇ log π_i` with `i` drawn by Gumbel-Max.
pub fn score_function_gradient(logits: &[f64], support: &Arc<Support>, target: &[f64], noise: &NoiseDraw) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let theta = tape.var(&[logits.len()], logits.to_vec())?;
    let map = ProbabilityMap::from_logits(support.clone(), &theta)?;
    let log_w: Vec<f64> = map.weight_values().iter().map(|w| w.ln()).collect();
    let i = gumbel_argmax(&log_w, &noise.gumbels);
    let d = Distance::L1.eval(target, support.position(i));
    map.weights().index_select(0, &[i])?.ln()?.sum()?.scale(d)?.backward()?;
    Ok(theta.grad().unwrap_or_else(|| vec![0.0; logits.len()]))
}

/// Gradient of the one-draw sampled loss.
pub fn reparameterized_gradient(
    logits: &[f64],
    support: &Arc<Support>,
    target: &[f64],
    noise: &NoiseDraw,
    tau: f64,
) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let theta = tape.var(&[logits.len()], logits.to_vec())?;
    let map = ProbabilityMap::from_logits(support.clone(), &theta)?;
    sampled_expected_error_with_noise(
        &map,
        &MixtureSpec::triangular(),
        target,
        Distance::L1,
        tau,
        std::slice::from_ref(noise),
    )?
    .backward()?;
    Ok(theta.grad().unwrap_or_else(|| vec![0.0; logits.len()]))
}

/// Logits and target of the fixed problem for `seed`.
pub fn problem(seed: u64) -> (Vec<f64>, [f64; 1]) {
    let mut rng = draw_rng(seed, 7_000_000);
    let logits: Vec<f64> = (0..BINS).map(|_| rng.sample(StandardNormal)).collect();
    let target = [rng.random_range(0.0..(BINS - 1) as f64)];
    (logits, target)
}

/// Per-coordinate gradient variances `(sf, rp)` over `params.draws` draws.
pub fn coordinate_variances(seed: u64, params: &VarParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let support = Arc::new(Support::grid_1d(BINS, 1.0)?);
    let (logits, target) = problem(seed);
    let mut sf = Vec::with_capacity(params.draws);
    let mut rp = Vec::with_capacity(params.draws);
    for k in 0..params.draws {
        let noise = NoiseDraw::from_seed(seed.wrapping_add(params.repeat << 32), k as u64, BINS, 1);
        sf.push(score_function_gradient(&logits, &support, &target, &noise)?);
        rp.push(reparameterized_gradient(&logits, &support, &target, &noise, params.tau)?);
    }
    Ok((coordinate_variance(&sf), coordinate_variance(&rp)))
}

pub fn compare_seed(seed: u64, params: &VarParams) -> Result<VarRow> {
    let (sf_var, rp_var) = coordinate_variances(seed, params)?;
    let sf_trace: f64 = sf_var.iter().sum();
    let rp_trace: f64 = rp_var.iter().sum();
    let larger = sf_var.iter().zip(&rp_var).filter(|(s, r)| s > r).count();
    let coord_fraction = larger as f64 / BINS as f64;
    let ratio = sf_trace / rp_trace;
    Ok(VarRow {
        seed,
        sf_trace,
        rp_trace,
        ratio,
        coord_fraction,
        coord_passed: coord_fraction >= COORD_FRACTION,
        passed: ratio > 1.0,
    })
}

pub fn run(params: &VarParams, exec: Execution) -> Result<Vec<VarRow>> {
    exec.try_map(params.seeds as usize, |s| compare_seed(params.base_seed + s as u64, params))
}

pub fn table(rows: &[VarRow]) -> Table {
    let mut t = Table::new([
        "seed",
        "sf_trace",
        "rp_trace",
        "ratio",
        "coord_fraction",
        "coord_result",
        "result",
    ]);
    for r in rows {
        t.push(vec![
            r.seed.to_string(),
            fmt_f64(r.sf_trace),
            fmt_f64(r.rp_trace),
            fmt_f64(r.ratio),
            fmt_f64(r.coord_fraction),
            fmt_pass(r.coord_passed),
            fmt_pass(r.passed),
        ]);
    }
    t
}
