//! Evaluation backends: each maps a configuration to energy efficiency in MB/J.

mod command;
mod model;
mod oracle;
mod replay;

pub use command::{CommandEvaluator, CommandOptions};
pub use model::ModelEvaluator;
pub use oracle::{EmilPmParams, IdaPccParams, Oracle, OracleEvaluator, OracleSpec};
pub use replay::ReplayEvaluator;

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::metrics::log::LogError;
use crate::metrics::MetricsError;
use crate::space::{Configuration, SpaceError};
use crate::surrogate::SurrogateError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("configuration {0} is not in the measurement log")]
    NotRecorded(String),
    #[error("configuration {0} appears more than once in the measurement log")]
    Ambiguous(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] SurrogateError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("bad evaluator setup: {0}")]
    Setup(String),
    #[error("command failed: {message}\n{output}")]
    Execution { message: String, output: String },
}

/// Maps configurations to energy efficiency (MB/J).
///
/// Implementations count every `evaluate` call, successful or not.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError>;

    fn evaluation_count(&self) -> u64;

    /// How many callers may usefully evaluate at once.
    fn max_concurrency(&self) -> usize {
        usize::MAX
    }

    /// Short human-readable identity, used in reports.
    fn describe(&self) -> String;
}

impl<E: Evaluator + ?Sized> Evaluator for &E {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError> {
        (**self).evaluate(config)
    }
    fn evaluation_count(&self) -> u64 {
        (**self).evaluation_count()
    }
    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError> {
        (**self).evaluate(config)
    }
    fn evaluation_count(&self) -> u64 {
        (**self).evaluation_count()
    }
    fn max_concurrency(&self) -> usize {
        (**self).max_concurrency()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

#[derive(Debug, Default)]
pub(crate) struct Counter(AtomicU64);

impl Counter {
    pub(crate) fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub(crate) fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}
