//! Campaigns over a space: exhaustive runs, annealing runs, dataset
//! generation, model training, and EM-versus-AML comparison.

mod campaign;
mod compare;
mod data;
mod report;
pub mod table3;

pub use campaign::{evaluate_configs, run_aml, run_em};
pub use compare::{compare, compare_pair, CompareRow, CompareSummary, Comparison};
pub use data::{dataset_from_log, gen_dataset, train_model, Sampling, TrainSummary, ValidationScheme};
pub use report::{Best, CampaignReport, EvalRecord, Method, ModelProvenance, TraceReport};

use thiserror::Error;

use crate::annealer::AnnealError;
use crate::evaluators::EvalError;
use crate::metrics::log::LogError;
use crate::metrics::MetricsError;
use crate::space::SpaceError;
use crate::surrogate::SurrogateError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Anneal(#[from] AnnealError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] SurrogateError),
    #[error("campaign stopped after {} evaluations: {source}", partial.records.len())]
    Partial {
        source: EvalError,
        partial: Box<CampaignReport>,
    },
    #[error("cannot compare: {0}")]
    Mismatch(String),
    #[error("report document: {0}")]
    Report(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
