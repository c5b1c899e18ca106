//! Minimal reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! Operations are recorded on a [`Tape`] as they run. Calling
//! [`Tensor::backward`] on a scalar walks the tape once in reverse and
//! accumulates gradients into every tensor that requires one.
//!
//! Binary ops accept identical shapes, or one operand whose shape equals
//! the other's without its leading (batch) dimension. Nothing else
//! broadcasts.
//!
//! ```
//! use sampling_argmax::autodiff::Tape;
//!
//! let tape = Tape::new();
//! let x = tape.var(&[2], vec![1.0, 2.0]).unwrap();
//! let y = x.square().unwrap().sum().unwrap();
//! y.backward().unwrap();
//! assert_eq!(x.grad().unwrap(), vec![2.0, 4.0]);
//! ```

mod gradcheck;
mod ops;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, REL_ERROR_FLOOR};
pub use ops::OpKind;
pub use tensor::{concat, forward_op, Tape, Tensor};
