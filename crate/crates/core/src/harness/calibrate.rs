//! Paired-seed comparison of training objectives: accuracy and calibration
//! on the test split.

use super::config::ConfigPatch;
use super::eval::{evaluate, Summary};
use super::report::{fmt_f64, fmt_opt, Table};
use super::stats::calibration_report;
use super::task::Split;
use super::train::{train, Objective};
use crate::error::Result;
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub seed: u64,
    pub method: Objective,
    pub summary: Summary,
    pub pearson_r: Option<f64>,
}

/// Trains and evaluates one objective under one seed.
pub fn run_one(patch: &ConfigPatch, method: Objective, seed: u64) -> Result<CalibrationRow> {
    let mut cfg = patch.run_config(seed);
    cfg.objective = method;
    let (model, _) = train(&cfg)?;
    let eval = evaluate(&model, &cfg.task, Split::Test)?;
    Ok(CalibrationRow {
        seed,
        method,
        summary: eval.summary,
        pearson_r: calibration_report(&eval.records)?,
    })
}

/// Every method on seeds `first..first + count`; the same seed gives every
/// method the same data, initialisation and shuffling.
pub fn run(
    patch: &ConfigPatch,
    methods: &[Objective],
    first: u64,
    count: u64,
    exec: Execution,
) -> Result<Vec<CalibrationRow>> {
    let jobs: Vec<(u64, Objective)> = (first..first + count)
        .flat_map(|s| methods.iter().map(move |&m| (s, m)))
        .collect();
    exec.try_map(jobs.len(), |i| run_one(patch, jobs[i].1, jobs[i].0))
}

/// Per-method averages: `(method, mean error, mean Pearson r)`.
pub fn aggregate(rows: &[CalibrationRow], methods: &[Objective]) -> Vec<(Objective, f64, Option<f64>)> {
    methods
        .iter()
        .map(|&m| {
            let mine: Vec<&CalibrationRow> = rows.iter().filter(|r| r.method == m).collect();
            let n = mine.len() as f64;
            let err = mine.iter().map(|r| r.summary.mean_err).sum::<f64>() / n;
            let rs: Option<Vec<f64>> = mine.iter().map(|r| r.pearson_r).collect();
            let r = rs.map(|v| v.iter().sum::<f64>() / n);
            (m, err, r)
        })
        .collect()
}

pub fn table(rows: &[CalibrationRow]) -> Table {
    let mut t = Table::new(["seed", "method", "mean_err", "median_err", "within1", "pearson_r"]);
    for r in rows {
        t.push(vec![
            r.seed.to_string(),
            r.method.to_string(),
            fmt_f64(r.summary.mean_err),
            fmt_f64(r.summary.median_err),
            fmt_f64(r.summary.within_one),
            fmt_opt(r.pearson_r),
        ]);
    }
    t
}

pub fn aggregate_table(rows: &[CalibrationRow], methods: &[Objective]) -> Table {
    let mut t = Table::new(["method", "mean_err", "pearson_r"]);
    for (m, err, r) in aggregate(rows, methods) {
        t.push(vec![m.to_string(), fmt_f64(err), fmt_opt(r)]);
    }
    t
}
