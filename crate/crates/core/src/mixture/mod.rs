//! Continuous mixture densities `p(y) = Σ w_i f_i(y)` over a discrete
//! support, with closed-form moments and CDFs and the exact (Gumbel-Max)
//! reference sampler.
//!
//! Multi-dimensional bases are separable products of the 1-D basis per axis,
//! and the categorical choice is over the flattened joint support. Bases are
//! not truncated at the support bounds.

mod basis;
mod ks;
mod noise;
mod support;

use std::sync::Arc;

pub use basis::Basis;
pub use ks::{ks_p_value, ks_statistic, ks_test, KsOutcome};
pub use noise::{draw_noise, draw_rng, gumbel_from_uniform, NoiseDraw, UNIFORM_CLAMP};
pub use support::{Support, SupportKind};

pub(crate) use support::squared_distance;

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};

/// Floor applied to weights before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

/// Tolerance on `Σ w_i = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Normalised weights over a support, carried on a gradient tape.
#[derive(Debug, Clone)]
pub struct ProbabilityMap {
    support: Arc<Support>,
    weights: Tensor,
}

fn validate_weights(n: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidWeights(format!("negative or NaN weight {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

impl ProbabilityMap {
    /// Wraps a weight tensor of shape `[n]`.
    pub fn new(support: Arc<Support>, weights: Tensor) -> Result<Self> {
        if weights.shape() != [support.len()] {
            return Err(Error::InvalidShape {
                op: "probability-map",
                shape: weights.shape(),
                reason: format!("expected [{}]", support.len()),
            });
        }
        weights.with_values(|w| validate_weights(support.len(), w))?;
        Ok(Self { support, weights })
    }

    /// `softmax(logits)` over a logits tensor of shape `[n]`.
    pub fn from_logits(support: Arc<Support>, logits: &Tensor) -> Result<Self> {
        let weights = logits.softmax(0)?;
        Self::new(support, weights)
    }

    /// Constant (non-differentiable) map on `tape`.
    pub fn constant(support: Arc<Support>, tape: &Tape, weights: Vec<f64>) -> Result<Self> {
        let n = support.len();
        let w = tape.constant(&[n], weights)?;
        Self::new(support, w)
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn weight_values(&self) -> Vec<f64> {
        self.weights.values()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `max_i π_i`.
    pub fn peak(&self) -> f64 {
        self.weights
            .with_values(|w| w.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Basis family plus its width parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    pub basis: Basis,
    /// Gaussian standard deviation; defaults to the grid spacing when unset.
    pub sigma: Option<f64>,
}

impl MixtureSpec {
    pub fn new(basis: Basis) -> Self {
        Self { basis, sigma: None }
    }

    pub fn uniform() -> Self {
        Self::new(Basis::Uniform)
    }

    pub fn triangular() -> Self {
        Self::new(Basis::Triangular)
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self {
            basis: Basis::Gaussian,
            sigma: Some(sigma),
        }
    }

    /// Width passed to the 1-D basis on `support`: the spacing `c`, or σ.
    pub fn width(&self, support: &Support) -> Result<f64> {
        match (self.basis, support.kind()) {
            (Basis::Gaussian, _) => {
                let sigma = match (self.sigma, support.spacing()) {
                    (Some(s), _) => s,
                    (None, Some(c)) => c,
                    (None, None) => {
                        return Err(Error::InvalidSpec(
                            "gaussian basis on a scattered support needs an explicit sigma".into(),
                        ))
                    }
                };
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidSpec(format!("sigma must be positive, got {sigma}")));
                }
                Ok(sigma)
            }
            (b, SupportKind::Scattered) => Err(Error::InvalidSpec(format!(
                "{b} basis needs a regular grid; scattered supports take the gaussian basis"
            ))),
            (_, SupportKind::RegularGrid) => Ok(support.spacing().expect("grid has spacing")),
        }
    }
}

fn check_index(support: &Support, i: usize) -> Result<()> {
    if i < support.len() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "component {i} out of range for {} points",
            support.len()
        )))
    }
}

fn check_point(support: &Support, y: &[f64]) -> Result<()> {
    if y.len() == support.dim() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: support.dim(),
            got: y.len(),
        })
    }
}

/// Density of component `i` at `y`.
pub fn basis_pdf(spec: &MixtureSpec, support: &Support, i: usize, y: &[f64]) -> Result<f64> {
    check_index(support, i)?;
    check_point(support, y)?;
    let width = spec.width(support)?;
    Ok(separable_pdf(spec.basis, width, support.position(i), y))
}

fn separable_pdf(basis: Basis, width: f64, centre: &[f64], y: &[f64]) -> f64 {
    centre
        .iter()
        .zip(y)
        .map(|(c, v)| basis.pdf(v - c, width))
        .product()
}

/// Inverse-CDF sample from component `i`, one uniform per axis.
pub fn basis_sample(spec: &MixtureSpec, support: &Support, i: usize, u: &[f64]) -> Result<Vec<f64>> {
    check_index(support, i)?;
    check_point(support, u)?;
    if let Some(&bad) = u.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::UniformOutOfRange(bad));
    }
    let width = spec.width(support)?;
    Ok(support
        .position(i)
        .iter()
        .zip(u)
        .map(|(c, &v)| c + spec.basis.quantile(v, width))
        .collect())
}

/// Closed-form mixture moments, per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Plain-value mixture `p(y) = Σ w_i f_i(y)`; shareable across threads.
#[derive(Debug, Clone)]
pub struct Mixture {
    support: Arc<Support>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    spec: MixtureSpec,
    width: f64,
}

impl Mixture {
    pub fn new(support: Arc<Support>, weights: Vec<f64>, spec: MixtureSpec) -> Result<Self> {
        validate_weights(support.len(), &weights)?;
        let width = spec.width(&support)?;
        let log_weights = weights.iter().map(|w| w.max(LOG_FLOOR).ln()).collect();
        Ok(Self {
            support,
            weights,
            log_weights,
            spec,
            width,
        })
    }

    /// Snapshot of a map's current weights.
    pub fn from_map(map: &ProbabilityMap, spec: MixtureSpec) -> Result<Self> {
        Self::new(map.support().clone(), map.weight_values(), spec)
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spec(&self) -> MixtureSpec {
        self.spec
    }

    /// Basis width in use (`c` or σ).
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn pdf(&self, y: &[f64]) -> Result<f64> {
        check_point(&self.support, y)?;
        Ok(self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * separable_pdf(self.spec.basis, self.width, self.support.position(i), y))
            .sum())
    }

    /// Mixture CDF; one-dimensional supports only.
    pub fn cdf(&self, y: f64) -> Result<f64> {
        if self.support.dim() != 1 {
            return Err(Error::NotOneDimensional(self.support.dim()));
        }
        Ok(self.cdf_unchecked(y))
    }

    fn cdf_unchecked(&self, y: f64) -> f64 {
        self.weights
            .iter()
            .zip(self.support.positions())
            .map(|(w, c)| w * self.spec.basis.cdf(y - c, self.width))
            .sum()
    }

    /// CDF as a closure, for goodness-of-fit tests.
    pub fn cdf_fn(&self) -> Result<impl Fn(f64) -> f64 + '_> {
        if self.support.dim() != 1 {
            return Err(Error::NotOneDimensional(self.support.dim()));
        }
        Ok(move |y| self.cdf_unchecked(y))
    }

    /// Mean `Σ π_i y_i` and per-axis variance `Σ π_i (y_i² + v_b) - mean²`.
    pub fn moments(&self) -> Moments {
        let d = self.support.dim();
        let vb = self.spec.basis.variance(self.width);
        let mut mean = vec![0.0; d];
        let mut second = vec![0.0; d];
        for (i, w) in self.weights.iter().enumerate() {
            for (k, y) in self.support.position(i).iter().enumerate() {
                mean[k] += w * y;
                second[k] += w * (y * y + vb);
            }
        }
        let variance = second.iter().zip(&mean).map(|(s, m)| s - m * m).collect();
        Moments { mean, variance }
    }

    /// Gumbel-Max component choice: `argmax_i (g_i + ln π_i)`.
    pub fn select_component(&self, gumbels: &[f64]) -> usize {
        gumbel_argmax(&self.log_weights, gumbels)
    }

    /// Exact sample: pick a component by Gumbel-Max, then draw from it with
    /// that component's basis uniforms.
    pub fn reference_sample(&self, noise: &NoiseDraw) -> Result<Vec<f64>> {
        if noise.len() != self.weights.len() || noise.dim() != self.support.dim() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                got: noise.len(),
            });
        }
        let i = self.select_component(&noise.gumbels);
        basis_sample(&self.spec, &self.support, i, noise.uniforms(i))
    }
}

/// Index maximising `g_i + log_w_i`; ties go to the lowest index.
pub fn gumbel_argmax(log_weights: &[f64], gumbels: &[f64]) -> usize {
    log_weights
        .iter()
        .zip(gumbels)
        .map(|(l, g)| g + l)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize, c: f64) -> Arc<Support> {
        Arc::new(Support::grid_1d(n, c).unwrap())
    }

    #[test]
    fn triangular_midpoint_is_interpolated() {
        let m = Mixture::new(grid(2, 1.0), vec![0.2, 0.8], MixtureSpec::triangular()).unwrap();
        assert_abs_diff_eq!(m.pdf(&[0.5]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn one_hot_uniform_density() {
        let m = Mixture::new(grid(3, 0.5), vec![0.0, 1.0, 0.0], MixtureSpec::uniform()).unwrap();
        assert_eq!(m.pdf(&[0.5]).unwrap(), 2.0);
        assert_eq!(m.cdf(0.5).unwrap(), 0.5);
    }

    #[test]
    fn moments_of_single_gaussian() {
        let s = grid(5, 1.0);
        let m = Mixture::new(s, vec![0.0, 0.0, 0.0, 1.0, 0.0], MixtureSpec::gaussian(1.0)).unwrap();
        let mo = m.moments();
        assert_eq!(mo.mean, vec![3.0]);
        assert_eq!(mo.variance, vec![1.0]);
    }

    #[test]
    fn moments_law_of_total_variance() {
        let s = grid(3, 1.0);
        let m = Mixture::new(s, vec![0.5, 0.0, 0.5], MixtureSpec::uniform()).unwrap();
        let mo = m.moments();
        assert_abs_diff_eq!(mo.mean[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mo.variance[0], 1.0 + 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn cdf_limits() {
        for b in Basis::ALL {
            let m = Mixture::new(grid(4, 1.0), vec![0.1, 0.2, 0.3, 0.4], MixtureSpec::new(b)).unwrap();
            assert_eq!(m.cdf(-1e3).unwrap(), 0.0);
            assert_abs_diff_eq!(m.cdf(1e3).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cdf_rejects_multi_dimensional() {
        let s = Arc::new(Support::grid(&[2, 2], 1.0).unwrap());
        let m = Mixture::new(s, vec![0.25; 4], MixtureSpec::uniform()).unwrap();
        assert_eq!(m.cdf(0.0).unwrap_err(), Error::NotOneDimensional(2));
    }

    #[test]
    fn weights_are_validated() {
        let s = grid(2, 1.0);
        assert!(Mixture::new(s.clone(), vec![0.5, 0.6], MixtureSpec::uniform()).is_err());
        assert!(Mixture::new(s.clone(), vec![-0.1, 1.1], MixtureSpec::uniform()).is_err());
        assert!(Mixture::new(s, vec![1.0], MixtureSpec::uniform()).is_err());
    }

    #[test]
    fn scattered_support_needs_gaussian() {
        let s = Arc::new(Support::scattered(1, vec![0.1, 0.4, 0.9], vec![(0.0, 1.0)]).unwrap());
        let w = vec![0.2, 0.3, 0.5];
        assert!(Mixture::new(s.clone(), w.clone(), MixtureSpec::triangular()).is_err());
        assert!(Mixture::new(s.clone(), w.clone(), MixtureSpec::new(Basis::Gaussian)).is_err());
        assert!(Mixture::new(s, w, MixtureSpec::gaussian(0.1)).is_ok());
    }

    #[test]
    fn gaussian_defaults_to_spacing() {
        let s = grid(3, 0.25);
        assert_eq!(MixtureSpec::new(Basis::Gaussian).width(&s).unwrap(), 0.25);
        assert!(MixtureSpec::gaussian(0.0).width(&s).is_err());
    }

    #[test]
    fn basis_pdf_and_sample_examples() {
        let s = Support::grid_1d(4, 1.0).unwrap();
        assert_eq!(basis_pdf(&MixtureSpec::uniform(), &s, 2, &[2.0]).unwrap(), 1.0);
        assert_eq!(basis_pdf(&MixtureSpec::triangular(), &s, 2, &[3.0]).unwrap(), 0.0);
        let s2 = Support::grid_1d(4, 2.0).unwrap();
        assert_eq!(basis_sample(&MixtureSpec::uniform(), &s2, 1, &[0.75]).unwrap(), vec![2.5]);
        for b in Basis::ALL {
            assert_eq!(basis_sample(&MixtureSpec::new(b), &s, 3, &[0.5]).unwrap(), vec![3.0]);
        }
        assert_eq!(
            basis_sample(&MixtureSpec::uniform(), &s, 0, &[1.0]).unwrap_err(),
            Error::UniformOutOfRange(1.0)
        );
    }

    #[test]
    fn separable_two_dimensional_pdf() {
        let s = Support::grid(&[3, 3], 1.0).unwrap();
        let spec = MixtureSpec::triangular();
        // centre (1, 2) is index 5
        let v = basis_pdf(&spec, &s, 5, &[1.5, 2.25]).unwrap();
        assert_abs_diff_eq!(v, 0.5 * 0.75, epsilon = 1e-15);
    }

    #[test]
    fn one_hot_reference_sample_uses_live_component() {
        let s = grid(5, 1.0);
        let m = Mixture::new(s, vec![0.0, 0.0, 1.0, 0.0, 0.0], MixtureSpec::triangular()).unwrap();
        for k in 0..200 {
            let y = m.reference_sample(&NoiseDraw::from_seed(3, k, 5, 1)).unwrap()[0];
            assert!((1.0..=3.0).contains(&y), "{y}");
        }
    }

    #[test]
    fn triangular_sample_variance() {
        let s = grid(1, 2.0);
        let spec = MixtureSpec::triangular();
        let n = 100_000;
        let mut rng = draw_rng(5, 0);
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let u = draw_noise(&mut rng, 1, 1).basis_uniforms[0];
                basis_sample(&spec, &s, 0, &[u]).unwrap()[0]
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let expected = 4.0 / 6.0;
        assert!((var - expected).abs() / expected < 0.03, "{var}");
    }
}
