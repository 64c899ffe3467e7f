use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::annealer::{AnnealParams, StepRecord};
use crate::space::Assignment;
use crate::surrogate::BoostedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Every configuration evaluated.
    #[serde(rename = "EM")]
    Em,
    /// Annealing search guided by an evaluator.
    #[serde(rename = "AML")]
    Aml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub config: Assignment,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Best {
    pub config: Assignment,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub params: AnnealParams,
    pub cooling_factor: f64,
    pub steps: Vec<StepRecord>,
}

/// Where a surrogate came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub source: Option<String>,
    pub features: Vec<String>,
    pub stages: usize,
    pub training_rows: usize,
    pub seed: u64,
}

impl ModelProvenance {
    pub fn of(model: &BoostedModel, source: Option<String>) -> Self {
        ModelProvenance {
            source,
            features: model.feature_names().to_vec(),
            stages: model.stages().len(),
            training_rows: model.training_rows(),
            seed: model.seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub space: String,
    /// Free-form tag such as the workload size.
    pub label: Option<String>,
    pub method: Method,
    pub evaluator: String,
    pub best: Option<Best>,
    /// Distinct configurations evaluated.
    pub evaluations_used: u64,
    pub cardinality: u64,
    /// `evaluations_used / cardinality`.
    pub budget_fraction: f64,
    pub wall_time_s: f64,
    /// One entry per distinct evaluation, in evaluation order.
    pub records: Vec<EvalRecord>,
    pub trace: Option<TraceReport>,
    pub model: Option<ModelProvenance>,
}

impl CampaignReport {
    pub fn new(space: &str, method: Method, evaluator: String, cardinality: u64) -> Self {
        CampaignReport {
            space: space.to_string(),
            label: None,
            method,
            evaluator,
            best: None,
            evaluations_used: 0,
            cardinality,
            budget_fraction: 0.0,
            wall_time_s: 0.0,
            records: Vec::new(),
            trace: None,
            model: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_model(mut self, model: ModelProvenance) -> Self {
        self.model = Some(model);
        self
    }

    /// Appends a record, keeping the first maximum as best.
    pub(crate) fn push(&mut self, config: Assignment, value: f64) {
        if self.best.as_ref().is_none_or(|b| value > b.value) {
            self.best = Some(Best {
                config: config.clone(),
                value,
            });
        }
        self.records.push(EvalRecord { config, value });
        self.evaluations_used = self.records.len() as u64;
        self.budget_fraction = if self.cardinality > 0 {
            self.evaluations_used as f64 / self.cardinality as f64
        } else {
            0.0
        };
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The document with wall time zeroed, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.wall_time_s = 0.0;
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Report(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
