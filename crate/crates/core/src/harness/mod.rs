//! Experiment harness: synthetic tasks, a small MLP, training and
//! evaluation, plus the verification suites driven by the CLI.

pub mod calibrate;
pub mod config;
pub mod distcheck;
pub mod eval;
pub mod gradcheck;
pub mod model;
pub mod report;
pub mod stats;
pub mod task;
pub mod train;
pub mod varcompare;

pub use config::ConfigPatch;
pub use eval::{evaluate, summarize, Evaluation, Summary, TrialRecord};
pub use model::Mlp;
pub use report::Table;
pub use stats::{calibration_report, pearson};
pub use task::{Example, Split, SyntheticTask, TaskKind};
pub use train::{train, EpochRecord, Objective, RunConfig};
