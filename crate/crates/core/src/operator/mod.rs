//! Differentiable localisation operators and their losses.
//!
//! * [`soft_argmax`]: the probability-weighted mean of the support.
//! * [`sample_differentiable`]: a Gumbel-softmax weighted combination of one
//!   basis sample per component, reparameterised so the gradient reaches the
//!   map through the relaxed weights only.
//! * Losses: error of the expectation, the discrete expected error, the
//!   sampled expected error, and the variance / Jensen–Shannon regularisers.
//!
//! At test time sampling is switched off and localisation is plain
//! soft-argmax ([`inference_localize`]).

mod config;
mod losses;

pub use config::{anneal_tau, Anneal, Distance, LossKind, SamplingConfig};
pub use losses::{
    component_samples, discrete_expected_error_loss, discrete_gaussian_target, discrete_variance,
    error_of_expectation_loss, evaluate_loss, gumbel_softmax, inference_localize, js_divergence,
    js_regularizer, js_regularizer_at, sample_differentiable, sampled_expected_error_loss,
    sampled_expected_error_with_noise, soft_argmax, variance_regularizer, LossInputs,
};
