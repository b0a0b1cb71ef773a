//! Experiment harness for the relational generalization learners: grid
//! configuration, orchestration, held-out scoring and CSV output.

pub mod config;
pub mod error;
pub mod experiment;
pub mod infer;
pub mod results;
pub mod summary;

pub use config::{ExperimentConfig, ModelKind, PoolMode, TauMode};
pub use error::{HarnessError, Result};
pub use experiment::{expected_rows, run_experiment};
pub use infer::{infer, InferReport, TauChoice};
pub use results::{emit_rows, evaluate, parse_rows, ResultRow};
pub use summary::{summarize, SummaryRow};
