use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("invalid shape for {op}: {shape:?} ({reason})")]
    InvalidShape {
        op: &'static str,
        shape: Vec<usize>,
        reason: String,
    },

    #[error("logarithm of non-positive value {0}")]
    LogOfNonPositive(f64),

    #[error("division by zero")]
    DivisionByZero,

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("backward root must be a scalar, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("backward root is not attached to a gradient tape")]
    NotAttached,

    #[error("tensors belong to different tapes")]
    TapeMismatch,

    #[error("function is not deterministic: two evaluations gave {first} and {second}")]
    NonDeterministic { first: f64, second: f64 },

    #[error("invalid probability weights: {0}")]
    InvalidWeights(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("uniform variate {0} outside (0, 1)")]
    UniformOutOfRange(f64),

    #[error("operation requires a one-dimensional support, got dimension {0}")]
    NotOneDimensional(usize),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    #[error("split {0} is empty")]
    EmptySplit(String),
}
