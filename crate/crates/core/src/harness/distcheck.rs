//! Distributional checks of the exact and relaxed samplers on random 1-D maps.
//!
//! Hard checks: the reference sampler passes a KS test against the mixture
//! CDF, the relaxed sampler's winning component follows `π`, and one-hot maps
//! stay inside their basis support. Relaxed-sample KS statistics at a high
//! and a low temperature are reported for comparison.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::report::{fmt_f64, fmt_pass, Table};
use crate::autodiff::Tape;
use crate::error::Result;
use crate::exec::Execution;
use crate::mixture::{draw_rng, ks_statistic, ks_test, Basis, Mixture, MixtureSpec, NoiseDraw, ProbabilityMap, Support};
use crate::operator::{component_samples, gumbel_softmax};

pub const MAPS: usize = 20;
pub const DRAWS: usize = 100_000;
pub const ALPHA: f64 = 0.01;
pub const FREQ_TOL: f64 = 0.01;
pub const TAU_HIGH: f64 = 1.0;
pub const TAU_LOW: f64 = 0.05;
const GRID: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct DistParams {
    pub maps: usize,
    pub draws: usize,
    pub seed: u64,
}

impl Default for DistParams {
    fn default() -> Self {
        Self {
            maps: MAPS,
            draws: DRAWS,
            seed: 0,
        }
    }
}

/// One map × basis result.
#[derive(Debug, Clone, PartialEq)]
pub struct DistRow {
    pub map: usize,
    pub basis: Basis,
    pub ks_stat: f64,
    pub ks_p: f64,
    pub ks_pass: bool,
    /// Largest deviation of relaxed argmax frequencies from `π`, over both
    /// temperatures.
    pub freq_max_dev: f64,
    pub freq_pass: bool,
    pub relaxed_ks_high: f64,
    pub relaxed_ks_low: f64,
    pub mean_dev: f64,
    pub var_rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneHotRow {
    pub basis: Basis,
    pub component: usize,
    pub max_offset: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistReport {
    pub rows: Vec<DistRow>,
    pub one_hot: Vec<OneHotRow>,
}

impl DistReport {
    pub fn reference_passes(&self) -> bool {
        self.rows.iter().all(|r| r.ks_pass)
    }

    pub fn frequencies_pass(&self) -> bool {
        self.rows.iter().all(|r| r.freq_pass)
    }

    pub fn one_hot_passes(&self) -> bool {
        self.one_hot.iter().all(|r| r.passed)
    }

    /// Relaxed samples fit better at the low temperature on every row.
    pub fn temperature_ordering_holds(&self) -> bool {
        self.rows.iter().all(|r| r.relaxed_ks_low < r.relaxed_ks_high)
    }

    pub fn passed(&self) -> bool {
        self.reference_passes() && self.frequencies_pass() && self.one_hot_passes()
    }
}

fn support() -> Result<Arc<Support>> {
    Ok(Arc::new(Support::grid_1d(GRID, 1.0)?))
}

/// Random map `map` under `seed`: softmax of scaled normal logits.
pub fn random_weights(seed: u64, map: usize) -> Vec<f64> {
    let mut rng = draw_rng(seed, 500_000 + map as u64);
    let logits: Vec<f64> = (0..GRID)
        .map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// Draw `k` of map `map`; reference and relaxed samplers share it.
fn noise(seed: u64, map: usize, k: usize) -> NoiseDraw {
    NoiseDraw::from_seed(seed ^ ((map as u64 + 1) << 40), k as u64, GRID, 1)
}

fn sample_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &x)| if x > b.1 { (i, x) } else { b })
        .0
}

fn map_rows(params: &DistParams, map: usize) -> Result<Vec<DistRow>> {
    let support = support()?;
    let weights = random_weights(params.seed, map);
    let mixtures = Basis::ALL
        .map(|b| Mixture::new(support.clone(), weights.clone(), MixtureSpec::new(b)));
    let mixtures = mixtures.into_iter().collect::<Result<Vec<_>>>()?;
    let taus = [TAU_HIGH, TAU_LOW];
    let mut reference = vec![Vec::with_capacity(params.draws); mixtures.len()];
    // relaxed[t][b]: relaxed samples at temperature t for basis b.
    let mut relaxed = vec![vec![Vec::with_capacity(params.draws); mixtures.len()]; taus.len()];
    let mut counts = vec![vec![0usize; GRID]; taus.len()];
    for k in 0..params.draws {
        let draw = noise(params.seed, map, k);
        let components: Vec<Vec<f64>> = mixtures
            .iter()
            .map(|m| component_samples(&m.spec(), &support, &draw))
            .collect::<Result<_>>()?;
        for (out, m) in reference.iter_mut().zip(&mixtures) {
            out.push(m.reference_sample(&draw)?[0]);
        }
        let tape = Tape::new();
        let pmap = ProbabilityMap::constant(support.clone(), &tape, weights.clone())?;
        for (t, &tau) in taus.iter().enumerate() {
            let soft = gumbel_softmax(&pmap, &draw, tau)?.values();
            counts[t][argmax(&soft)] += 1;
            for (b, ys) in components.iter().enumerate() {
                relaxed[t][b].push(soft.iter().zip(ys).map(|(w, y)| w * y).sum());
            }
        }
    }
    let freq_dev = counts
        .iter()
        .flat_map(|c| c.iter().zip(&weights))
        .map(|(c, w)| (*c as f64 / params.draws as f64 - w).abs())
        .fold(0.0, f64::max);
    let mut rows = Vec::new();
    for (b, mixture) in mixtures.iter().enumerate() {
        let cdf = mixture.cdf_fn()?;
        let ks = ks_test(&reference[b], &cdf)?;
        let moments = mixture.moments();
        let (mean, var) = sample_moments(&reference[b]);
        rows.push(DistRow {
            map,
            basis: mixture.spec().basis,
            ks_stat: ks.statistic,
            ks_p: ks.p_value,
            ks_pass: ks.passes(ALPHA),
            freq_max_dev: freq_dev,
            freq_pass: freq_dev <= FREQ_TOL,
            relaxed_ks_high: ks_statistic(&relaxed[0][b], &cdf)?,
            relaxed_ks_low: ks_statistic(&relaxed[1][b], &cdf)?,
            mean_dev: (mean - moments.mean[0]).abs(),
            var_rel_dev: (var - moments.variance[0]).abs() / moments.variance[0],
        });
    }
    Ok(rows)
}

fn one_hot_row(params: &DistParams, basis: Basis) -> Result<OneHotRow> {
    let support = support()?;
    let component = GRID / 2;
    let mut weights = vec![0.0; GRID];
    weights[component] = 1.0;
    let mixture = Mixture::new(support.clone(), weights, MixtureSpec::new(basis))?;
    let centre = support.position(component)[0];
    let mut max_offset: f64 = 0.0;
    for k in 0..params.draws.min(10_000) {
        let y = mixture.reference_sample(&noise(params.seed, usize::MAX - 1, k))?[0];
        max_offset = max_offset.max((y - centre).abs());
    }
    let reach = match basis {
        Basis::Uniform => 0.5,
        Basis::Triangular => 1.0,
        // Unbounded support; any sample must still come from this component,
        // which lies beyond nine standard deviations with negligible odds.
        Basis::Gaussian => 9.0,
    } * mixture.width();
    Ok(OneHotRow {
        basis,
        component,
        max_offset,
        passed: max_offset <= reach,
    })
}

pub fn run(params: &DistParams, exec: Execution) -> Result<DistReport> {
    let per_map = exec.try_map(params.maps, |m| map_rows(params, m))?;
    let one_hot = Basis::ALL
        .into_iter()
        .map(|b| one_hot_row(params, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistReport {
        rows: per_map.into_iter().flatten().collect(),
        one_hot,
    })
}

pub fn table(report: &DistReport) -> Table {
    let mut t = Table::new([
        "map",
        "basis",
        "ks_stat",
        "ks_p",
        "ks_result",
        "freq_max_dev",
        "freq_result",
        "relaxed_ks_tau_high",
        "relaxed_ks_tau_low",
        "mean_dev",
        "var_rel_dev",
    ]);
    for r in &report.rows {
        t.push(vec![
            r.map.to_string(),
            r.basis.to_string(),
            fmt_f64(r.ks_stat),
            fmt_f64(r.ks_p),
            fmt_pass(r.ks_pass),
            fmt_f64(r.freq_max_dev),
            fmt_pass(r.freq_pass),
            fmt_f64(r.relaxed_ks_high),
            fmt_f64(r.relaxed_ks_low),
            fmt_f64(r.mean_dev),
            fmt_f64(r.var_rel_dev),
        ]);
    }
    t
}

pub fn one_hot_table(report: &DistReport) -> Table {
    let mut t = Table::new(["basis", "component", "max_offset", "result"]);
    for r in &report.one_hot {
        t.push(vec![
            r.basis.to_string(),
            r.component.to_string(),
            fmt_f64(r.max_offset),
            fmt_pass(r.passed),
        ]);
    }
    t
}
