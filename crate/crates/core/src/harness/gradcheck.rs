//! Finite-difference check of every loss, basis and dimension.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::report::{fmt_f64, fmt_pass, Table};
use crate::autodiff::{grad_check, Tensor};
use crate::error::Result;
use crate::exec::Execution;
use crate::mixture::{draw_rng, Basis, MixtureSpec, NoiseDraw, ProbabilityMap, Support};
use crate::operator::{evaluate_loss, soft_argmax, Distance, LossInputs, LossKind};

pub const STEP: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const SEEDS: u64 = 20;
/// Temperature and number of frozen draws for the sampled loss.
pub const TAU: f64 = 0.5;
pub const DRAWS: usize = 3;
const SIGMA_T_SQ: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCase {
    pub loss: LossKind,
    pub basis: Basis,
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradRow {
    pub case: GradCase,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Every case in suite order: loss, basis, dimension, seed.
pub fn cases() -> Vec<GradCase> {
    let mut out = Vec::new();
    for loss in LossKind::all(SIGMA_T_SQ) {
        for basis in Basis::ALL {
            for dim in [1, 2] {
                for seed in 0..SEEDS {
                    out.push(GradCase { loss, basis, dim, seed });
                }
            }
        }
    }
    out
}

/// Randomised problem for one case: support, logits, target and noise.
pub struct Problem {
    pub support: Arc<Support>,
    pub logits: Vec<f64>,
    pub target: Vec<f64>,
    pub noise: Vec<NoiseDraw>,
    pub spec: MixtureSpec,
}

impl Problem {
    pub fn new(case: &GradCase) -> Result<Self> {
        let mut rng = draw_rng(case.seed, 1000 + case.dim as u64);
        let support = Arc::new(match case.dim {
            1 => Support::grid_1d(7, 1.0)?,
            _ => Support::grid(&[3, 4], 1.0)?,
        });
        let n = support.len();
        let logits = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let target = support
            .bounds()
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect();
        let noise = (0..DRAWS as u64)
            .map(|k| NoiseDraw::from_seed(case.seed, 2000 + 10 * k + case.dim as u64, n, case.dim))
            .collect();
        Ok(Self {
            support,
            logits,
            target,
            noise,
            spec: MixtureSpec::new(case.basis),
        })
    }
}

/// Checks the gradient of `loss` (a function of the map and inputs) with
/// respect to the logits of `case`'s problem.
pub fn check_with<F>(case: &GradCase, loss: F) -> Result<GradRow>
where
    F: Fn(&ProbabilityMap, &LossInputs<'_>) -> Result<Tensor>,
{
    let p = Problem::new(case)?;
    // The JS centre is detached; freeze it at the unperturbed expectation so
    // finite differences see the same function.
    let center = {
        let tape = crate::autodiff::Tape::new();
        let logits = tape.constant(&[p.logits.len()], p.logits.clone())?;
        soft_argmax(&ProbabilityMap::from_logits(p.support.clone(), &logits)?)?.values()
    };
    let inputs = LossInputs {
        target: &p.target,
        spec: &p.spec,
        distance: Distance::L1,
        tau: TAU,
        noise: &p.noise,
        js_center: Some(&center),
    };
    let f = |logits: &Tensor| -> Result<Tensor> {
        let map = ProbabilityMap::from_logits(p.support.clone(), logits)?;
        loss(&map, &inputs)
    };
    let tape = crate::autodiff::Tape::new();
    let x = tape.var(&[p.logits.len()], p.logits.clone())?;
    let report = grad_check(f, &x, STEP, TOL)?;
    Ok(GradRow {
        case: *case,
        max_rel_error: report.max_rel_error,
        passed: report.passed,
    })
}

pub fn check_case(case: &GradCase) -> Result<GradRow> {
    check_with(case, |map, inputs| evaluate_loss(case.loss, map, inputs))
}

pub fn run(exec: Execution) -> Result<Vec<GradRow>> {
    let all = cases();
    exec.try_map(all.len(), |i| check_case(&all[i]))
}

pub fn table(rows: &[GradRow]) -> Table {
    let mut t = Table::new(["loss", "basis", "dim", "seed", "max_rel_error", "result"]);
    for r in rows {
        t.push(vec![
            r.case.loss.name().to_string(),
            r.case.basis.to_string(),
            r.case.dim.to_string(),
            r.case.seed.to_string(),
            fmt_f64(r.max_rel_error),
            fmt_pass(r.passed),
        ]);
    }
    t
}
