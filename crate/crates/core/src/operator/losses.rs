use rand::Rng;

use super::config::{Distance, LossKind, SamplingConfig};
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::mixture::{
    basis_sample, draw_noise, squared_distance, MixtureSpec, NoiseDraw, ProbabilityMap, Support,
    LOG_FLOOR,
};

fn check_target(map: &ProbabilityMap, y_t: &[f64]) -> Result<()> {
    let d = map.support().dim();
    if y_t.len() == d {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: d,
            got: y_t.len(),
        })
    }
}

/// `π` as a `[1, n]` row times an `[n, D]` matrix, reshaped to `[D]`.
fn weighted_rows(weights: &Tensor, rows: &Tensor) -> Result<Tensor> {
    let n = weights.len();
    let d = rows.shape()[1];
    weights.reshape(&[1, n])?.matmul(rows)?.reshape(&[d])
}

/// Probability-weighted mean of the support positions.
pub fn soft_argmax(map: &ProbabilityMap) -> Result<Tensor> {
    let w = map.weights();
    let positions = map.support().positions_tensor(w.tape())?;
    weighted_rows(w, &positions)
}

/// Test-time localisation; no noise is drawn.
pub fn inference_localize(map: &ProbabilityMap) -> Result<Vec<f64>> {
    Ok(soft_argmax(map)?.values())
}

/// `d(y_t, soft_argmax(π))`.
pub fn error_of_expectation_loss(map: &ProbabilityMap, y_t: &[f64], distance: Distance) -> Result<Tensor> {
    check_target(map, y_t)?;
    distance.on_tape(&soft_argmax(map)?, y_t)
}

/// `Σ π_i d(y_t, y_i)`, differentiated pathwise through the weights.
pub fn discrete_expected_error_loss(
    map: &ProbabilityMap,
    y_t: &[f64],
    distance: Distance,
) -> Result<Tensor> {
    check_target(map, y_t)?;
    let support = map.support();
    let errors: Vec<f64> = (0..support.len())
        .map(|i| distance.eval(y_t, support.position(i)))
        .collect();
    let w = map.weights();
    let e = w.tape().constant(&[support.len()], errors)?;
    w.mul(&e)?.sum()
}

fn check_noise(map: &ProbabilityMap, noise: &NoiseDraw) -> Result<()> {
    if noise.len() != map.len() || noise.dim() != map.support().dim() {
        return Err(Error::LengthMismatch {
            expected: map.len(),
            got: noise.len(),
        });
    }
    Ok(())
}

/// Relaxed one-hot `softmax((g + ln π) / τ)`.
pub fn gumbel_softmax(map: &ProbabilityMap, noise: &NoiseDraw, tau: f64) -> Result<Tensor> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::NonPositiveTemperature(tau));
    }
    check_noise(map, noise)?;
    let w = map.weights();
    let g = w.tape().constant(&[noise.len()], noise.gumbels.clone())?;
    w.clamp_min(LOG_FLOOR)?
        .ln()?
        .add(&g)?
        .scale(1.0 / tau)?
        .softmax(0)
}

/// One basis sample per component, as a constant `[n, D]` matrix.
pub fn component_samples(spec: &MixtureSpec, support: &Support, noise: &NoiseDraw) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(support.len() * support.dim());
    for i in 0..support.len() {
        out.extend(basis_sample(spec, support, i, noise.uniforms(i))?);
    }
    Ok(out)
}

/// Differentiable sample `Σ π̂_i ŷ_i`; gradient flows only through `π̂`.
pub fn sample_differentiable(
    map: &ProbabilityMap,
    spec: &MixtureSpec,
    noise: &NoiseDraw,
    tau: f64,
) -> Result<Tensor> {
    let relaxed = gumbel_softmax(map, noise, tau)?;
    let support = map.support();
    let samples = component_samples(spec, support, noise)?;
    let samples = relaxed
        .tape()
        .constant(&[support.len(), support.dim()], samples)?;
    weighted_rows(&relaxed, &samples)
}

/// Mean distance over the given (frozen) noise draws.
pub fn sampled_expected_error_with_noise(
    map: &ProbabilityMap,
    spec: &MixtureSpec,
    y_t: &[f64],
    distance: Distance,
    tau: f64,
    noise: &[NoiseDraw],
) -> Result<Tensor> {
    check_target(map, y_t)?;
    if noise.is_empty() {
        return Err(Error::InvalidArgument("no noise draws".into()));
    }
    let mut total: Option<Tensor> = None;
    for draw in noise {
        let d = distance.on_tape(&sample_differentiable(map, spec, draw, tau)?, y_t)?;
        total = Some(match total {
            Some(t) => t.add(&d)?,
            None => d,
        });
    }
    total
        .expect("at least one draw")
        .scale(1.0 / noise.len() as f64)
}

/// Monte-Carlo expected error with `cfg.num_samples` fresh draws from `rng`.
pub fn sampled_expected_error_loss<R: Rng + ?Sized>(
    map: &ProbabilityMap,
    spec: &MixtureSpec,
    y_t: &[f64],
    cfg: &SamplingConfig,
    tau: f64,
    rng: &mut R,
) -> Result<Tensor> {
    cfg.validate()?;
    let (n, d) = (map.len(), map.support().dim());
    let noise: Vec<NoiseDraw> = (0..cfg.num_samples).map(|_| draw_noise(rng, n, d)).collect();
    sampled_expected_error_with_noise(map, spec, y_t, cfg.distance, tau, &noise)
}

/// Discrete variance `Σ π_i (y_i - E[y])²`, summed over axes.
pub fn discrete_variance(map: &ProbabilityMap) -> Result<Tensor> {
    let w = map.weights();
    let mean = soft_argmax(map)?;
    let positions = map.support().positions_tensor(w.tape())?;
    let centred = positions.sub(&mean)?.square()?;
    weighted_rows(w, &centred)?.sum()
}

/// `(Var(π) - σ_t²)²`.
pub fn variance_regularizer(map: &ProbabilityMap, sigma_t_sq: f64) -> Result<Tensor> {
    check_sigma(sigma_t_sq)?;
    discrete_variance(map)?.add_scalar(-sigma_t_sq)?.square()
}

fn check_sigma(sigma_t_sq: f64) -> Result<()> {
    if sigma_t_sq > 0.0 && sigma_t_sq.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("target variance must be positive, got {sigma_t_sq}")))
    }
}

/// Gaussian with variance `σ_t²` at `center`, evaluated on the support and
/// renormalised to sum to one.
pub fn discrete_gaussian_target(support: &Support, center: &[f64], sigma_t_sq: f64) -> Result<Vec<f64>> {
    check_sigma(sigma_t_sq)?;
    let logits: Vec<f64> = (0..support.len())
        .map(|i| -squared_distance(support.position(i), center) / (2.0 * sigma_t_sq))
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unnorm: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    Ok(unnorm.into_iter().map(|v| v / total).collect())
}

/// Jensen–Shannon divergence (natural log) between `p` and constant `q`,
/// with a floor inside every logarithm.
pub fn js_divergence(p: &Tensor, q: &[f64]) -> Result<Tensor> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let tape = p.tape();
    let q_t = tape.constant(&p.shape(), q.to_vec())?;
    let log_q = tape.constant(&p.shape(), q.iter().map(|v| v.max(LOG_FLOOR).ln()).collect())?;
    let m = p.add(&q_t)?.scale(0.5)?;
    let log_m = m.clamp_min(LOG_FLOOR)?.ln()?;
    let log_p = p.clamp_min(LOG_FLOOR)?.ln()?;
    let kl_pm = p.mul(&log_p.sub(&log_m)?)?.sum()?;
    let kl_qm = q_t.mul(&log_q.sub(&log_m)?)?.sum()?;
    kl_pm.add(&kl_qm)?.scale(0.5)
}

/// JS divergence to a discrete Gaussian centred at a fixed `center`.
pub fn js_regularizer_at(map: &ProbabilityMap, center: &[f64], sigma_t_sq: f64) -> Result<Tensor> {
    check_target(map, center)?;
    let q = discrete_gaussian_target(map.support(), center, sigma_t_sq)?;
    js_divergence(map.weights(), &q)
}

/// JS divergence to a discrete Gaussian centred at the map's own
/// expectation. The centre is detached from the gradient graph.
pub fn js_regularizer(map: &ProbabilityMap, sigma_t_sq: f64) -> Result<Tensor> {
    let center = soft_argmax(map)?.values();
    js_regularizer_at(map, &center, sigma_t_sq)
}

/// Everything a loss might need besides the map itself.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    pub target: &'a [f64],
    pub spec: &'a MixtureSpec,
    pub distance: Distance,
    pub tau: f64,
    /// Frozen draws for the sampled loss; ignored by the others.
    pub noise: &'a [NoiseDraw],
    /// Fixed JS centre; when `None` the map's detached expectation is used.
    pub js_center: Option<&'a [f64]>,
}

/// Evaluates any [`LossKind`] on `map`.
pub fn evaluate_loss(kind: LossKind, map: &ProbabilityMap, inputs: &LossInputs<'_>) -> Result<Tensor> {
    match kind {
        LossKind::ErrorOfExpectation => error_of_expectation_loss(map, inputs.target, inputs.distance),
        LossKind::DiscreteExpectedError => {
            discrete_expected_error_loss(map, inputs.target, inputs.distance)
        }
        LossKind::SampledExpectedError => sampled_expected_error_with_noise(
            map,
            inputs.spec,
            inputs.target,
            inputs.distance,
            inputs.tau,
            inputs.noise,
        ),
        LossKind::VarianceRegularizer { sigma_t_sq } => variance_regularizer(map, sigma_t_sq),
        LossKind::JsRegularizer { sigma_t_sq } => match inputs.js_center {
            Some(c) => js_regularizer_at(map, c, sigma_t_sq),
            None => js_regularizer(map, sigma_t_sq),
        },
    }
}
