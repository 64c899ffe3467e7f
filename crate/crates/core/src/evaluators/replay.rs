use std::collections::HashMap;

use super::{Counter, EvalError, Evaluator};
use crate::metrics::{energy_efficiency, RawMeasurement};
use crate::space::{Configuration, ParameterSpace};

/// Looks configurations up in a recorded measurement log.
#[derive(Debug)]
pub struct ReplayEvaluator {
    space: ParameterSpace,
    rows: HashMap<Configuration, Vec<RawMeasurement>>,
    count: Counter,
}

impl ReplayEvaluator {
    /// Duplicate configurations are kept and reported as ambiguous on lookup.
    pub fn new(space: ParameterSpace, log: Vec<RawMeasurement>) -> Self {
        let mut rows: HashMap<Configuration, Vec<RawMeasurement>> = HashMap::new();
        for m in log {
            rows.entry(m.config.clone()).or_default().push(m);
        }
        ReplayEvaluator {
            space,
            rows,
            count: Counter::default(),
        }
    }

    pub fn measurement(&self, config: &Configuration) -> Result<&RawMeasurement, EvalError> {
        match self.rows.get(config).map(Vec::as_slice) {
            None | Some([]) => Err(EvalError::NotRecorded(self.space.describe(config))),
            Some([m]) => Ok(m),
            Some(_) => Err(EvalError::Ambiguous(self.space.describe(config))),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl Evaluator for ReplayEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError> {
        self.count.bump();
        Ok(energy_efficiency(self.measurement(config)?)?)
    }

    fn evaluation_count(&self) -> u64 {
        self.count.get()
    }

    fn describe(&self) -> String {
        format!("replay ({} configurations)", self.rows.len())
    }
}
