//! Sampling-argmax: differentiable localisation by minimising the expected
//! error of samples drawn from a continuous mixture built on a discrete
//! probability map.
//!
//! Modules, bottom-up:
//!
//! * [`autodiff`]: tape-based reverse-mode differentiation over `f64` arrays.
//! * [`mixture`]: supports, basis densities, mixture moments/CDFs, noise and
//!   the exact reference sampler, plus Kolmogorov–Smirnov testing.
//! * [`operator`]: soft-argmax, Gumbel-softmax sampling and all losses.
//! * [`harness`]: synthetic tasks, a small MLP, training, evaluation and the
//!   verification suites behind the `sargmax` CLI.

pub mod autodiff;
pub mod error;
pub mod exec;
pub mod harness;
pub mod mixture;
pub mod operator;

pub use error::{Error, Result};
pub use exec::Execution;
