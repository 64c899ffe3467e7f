//! Autotuning of CPU + accelerator configurations for energy efficiency.
//!
//! A [`space::ParameterSpace`] lists the tunable parameters. Configurations
//! are scored by an [`evaluators::Evaluator`] (a trained surrogate, a
//! recorded log, a synthetic oracle, or a real command) and searched either
//! exhaustively or with [`annealer::anneal`]. The [`harness`] ties these into
//! campaigns and reports.

pub mod annealer;
pub mod evaluators;
pub mod harness;
pub mod metrics;
pub mod space;
pub mod surrogate;
