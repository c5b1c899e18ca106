use super::eval::TrialRecord;
use crate::error::{Error, Result};

/// Pearson correlation; `Ok(None)` when either list has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Correlation between peak confidence and correctness (negated error).
pub fn calibration_report(records: &[TrialRecord]) -> Result<Option<f64>> {
    let peaks: Vec<f64> = records.iter().map(|r| r.peak).collect();
    let correctness: Vec<f64> = records.iter().map(|r| -r.error).collect();
    pearson(&peaks, &correctness)
}
