//! Regression surrogate for energy efficiency.
//!
//! Regression trees are grown greedily (CART, variance reduction) and
//! combined with AdaBoost.R2: trees are fitted on weighted bootstrap
//! resamples, samples are reweighted by their linear relative loss, and the
//! ensemble predicts the weighted median of its stages.

mod boost;
mod tree;
mod validate;

pub use boost::{fit_boosted, BoostParams, BoostedModel, Stage, MODEL_FORMAT};
pub use tree::{fit_tree, Node, RegressionTree, TreeParams};
pub use validate::{
    holdout, kfold_cv, r2_score, split_train_test, Fitted, ModelMetrics, ModelSpec, Validation,
};

use thiserror::Error;

use crate::space::FeatureVector;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("dataset needs at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("expected {expected} features, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("R² is undefined for constant targets")]
    ConstantTargets,
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model document: {0}")]
    Persist(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Feature rows with targets and optional non-negative sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    rows: Vec<Vec<f64>>,
    targets: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self, SurrogateError> {
        Self::with_weights(feature_names, rows, targets, None)
    }

    pub fn with_weights(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        targets: Vec<f64>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self, SurrogateError> {
        if rows.len() != targets.len() {
            return Err(SurrogateError::LengthMismatch(rows.len(), targets.len()));
        }
        let arity = feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != arity) {
            return Err(SurrogateError::Arity {
                expected: arity,
                found: bad.len(),
            });
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(SurrogateError::InvalidData("non-finite feature".into()));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(SurrogateError::InvalidData("non-finite target".into()));
        }
        if let Some(w) = &weights {
            if w.len() != rows.len() {
                return Err(SurrogateError::LengthMismatch(rows.len(), w.len()));
            }
            if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(SurrogateError::InvalidData("weights must be finite and non-negative".into()));
            }
            if !rows.is_empty() && w.iter().all(|&x| x == 0.0) {
                return Err(SurrogateError::InvalidData("weights are all zero".into()));
            }
        }
        Ok(Dataset {
            feature_names,
            rows,
            targets,
            weights,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Rows at `indices`, in that order (repeats allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
            weights: self
                .weights
                .as_ref()
                .map(|w| indices.iter().map(|&i| w[i]).collect()),
        }
    }
}

pub(crate) fn check_arity(expected: usize, x: &[f64]) -> Result<(), SurrogateError> {
    if x.len() != expected {
        return Err(SurrogateError::Arity {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

impl From<&FeatureVector> for Vec<f64> {
    fn from(v: &FeatureVector) -> Self {
        v.0.clone()
    }
}
