//! Analytic vs central-finite-difference gradient comparison.

use super::tensor::{Tape, Tensor};
use crate::error::{Error, Result};

/// Denominator floor for the relative error.
pub const REL_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_error: f64,
    /// Coordinate where `max_rel_error` was attained.
    pub worst_index: usize,
    pub tol: f64,
    pub passed: bool,
}

/// `|a - b| / max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_ERROR_FLOOR)
}

/// Compares the tape gradient of scalar `f` at `x` against central finite
/// differences with the given step. `f` is evaluated on fresh tapes, so `x`
/// only supplies shape and values.
pub fn grad_check<F>(f: F, x: &Tensor, step: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&Tensor) -> Result<Tensor>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
    }
    let shape = x.shape();
    let base = x.values();

    let eval = |values: Vec<f64>| -> Result<f64> {
        let tape = Tape::new();
        let input = tape.constant(&shape, values)?;
        let out = f(&input)?;
        if out.len() != 1 {
            return Err(Error::NotScalar(out.shape()));
        }
        Ok(out.item())
    };

    let first = eval(base.clone())?;
    let second = eval(base.clone())?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::NonDeterministic { first, second });
    }

    let tape = Tape::new();
    let input = tape.var(&shape, base.clone())?;
    let out = f(&input)?;
    out.backward()?;
    let analytic = input.grad().unwrap_or_else(|| vec![0.0; base.len()]);

    let mut numeric = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut plus = base.clone();
        plus[i] += step;
        let mut minus = base.clone();
        minus[i] -= step;
        numeric.push((eval(plus)? - eval(minus)?) / (2.0 * step));
    }

    let (worst_index, max_rel_error) = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &b)| relative_error(a, b))
        .enumerate()
        .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });

    Ok(GradCheckReport {
        analytic,
        numeric,
        max_rel_error,
        worst_index,
        tol,
        passed: max_rel_error < tol,
    })
}
