use serde::{Deserialize, Serialize};

use super::model::Mlp;
use super::task::{Split, SyntheticTask};
use crate::error::{Error, Result};
use crate::operator::Distance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub prediction: Vec<f64>,
    pub target: Vec<f64>,
    /// Largest map weight.
    pub peak: f64,
    /// ℓ1 distance between prediction and target.
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean_err: f64,
    pub median_err: f64,
    /// Fraction of records with error at most one cell.
    pub within_one: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl TrialRecord {
    pub fn new(prediction: Vec<f64>, target: Vec<f64>, peak: f64) -> Self {
        let error = Distance::L1.eval(&prediction, &target);
        Self {
            prediction,
            target,
            peak,
            error,
        }
    }
}

pub fn summarize(records: &[TrialRecord], cell: f64) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::EmptySplit("no records".into()));
    }
    let n = records.len() as f64;
    let mut errors: Vec<f64> = records.iter().map(|r| r.error).collect();
    let mean_err = errors.iter().sum::<f64>() / n;
    errors.sort_by(f64::total_cmp);
    let mid = errors.len() / 2;
    let median_err = if errors.len() % 2 == 1 {
        errors[mid]
    } else {
        0.5 * (errors[mid - 1] + errors[mid])
    };
    let within_one = errors.iter().filter(|&&e| e <= cell).count() as f64 / n;
    Ok(Summary {
        mean_err,
        median_err,
        within_one,
    })
}

/// Deterministic evaluation of `model` on one split.
pub fn evaluate(model: &Mlp, task: &SyntheticTask, split: Split) -> Result<Evaluation> {
    let count = task.count(split);
    if count == 0 {
        return Err(Error::EmptySplit(split.name().into()));
    }
    let support = task.support()?;
    let records = (0..count)
        .map(|i| {
            let ex = task.example(split, i);
            let (weights, point) = model.predict(&support, &ex.observation)?;
            let peak = weights.iter().copied().fold(0.0, f64::max);
            Ok(TrialRecord::new(point, ex.target, peak))
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records, task.cell())?;
    Ok(Evaluation { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::task::TaskKind;

    #[test]
    fn one_hot_at_nearest_cell_is_within_half_a_cell() {
        let task = SyntheticTask::new(TaskKind::Signal1d, 0.2, 5);
        let records: Vec<TrialRecord> = (0..100)
            .map(|i| {
                let ex = task.example(Split::Test, i);
                TrialRecord::new(vec![ex.target[0].round()], ex.target, 1.0)
            })
            .collect();
        let s = summarize(&records, 1.0).unwrap();
        assert!(s.mean_err <= 0.5);
        assert_eq!(s.within_one, 1.0);
    }

    #[test]
    fn summary_mean_is_arithmetic_mean() {
        let records: Vec<TrialRecord> = [0.5, 1.5, 4.0]
            .iter()
            .map(|&e| TrialRecord::new(vec![e], vec![0.0], 0.5))
            .collect();
        let s = summarize(&records, 1.0).unwrap();
        assert_eq!(s.mean_err, 2.0);
        assert_eq!(s.median_err, 1.5);
        assert_eq!(s.within_one, 1.0 / 3.0);
    }

    #[test]
    fn record_count_matches_split() {
        let mut task = SyntheticTask::new(TaskKind::Signal1d, 0.2, 5);
        task.val = 17;
        let model = Mlp::new(task.observation_len(), 8, task.size, 1);
        let eval = evaluate(&model, &task, Split::Val).unwrap();
        assert_eq!(eval.records.len(), 17);
        assert!(eval.records.iter().all(|r| r.error >= 0.0 && r.peak > 0.0 && r.peak <= 1.0));
        task.val = 0;
        assert!(matches!(evaluate(&model, &task, Split::Val), Err(Error::EmptySplit(_))));
    }
}
