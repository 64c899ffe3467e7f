use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_on, RegressionTree, TreeParams};
use super::{check_arity, Dataset, SurrogateError};

/// Format tag written into persisted models.
pub const MODEL_FORMAT: &str = "hetune-adaboost-r2/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub learning_rate: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            n_estimators: 50,
            max_depth: Some(8),
            min_samples_leaf: 2,
            learning_rate: 1.0,
        }
    }
}

impl BoostParams {
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
        }
    }

    fn check(&self) -> Result<(), SurrogateError> {
        if self.n_estimators == 0 {
            return Err(SurrogateError::InvalidParameter("n_estimators must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(SurrogateError::InvalidParameter("learning_rate must be positive".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(SurrogateError::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub weight: f64,
    pub tree: RegressionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    format: String,
    feature_names: Vec<String>,
    params: BoostParams,
    loss: String,
    seed: u64,
    training_rows: usize,
    stages: Vec<Stage>,
}

/// AdaBoost.R2 with linear loss.
///
/// Each round draws a weighted bootstrap of `n` rows, fits a tree, and scores
/// every row by `|error| / max |error|`. Rounds stop early on a perfect fit
/// or when the weighted mean loss reaches 0.5.
pub fn fit_boosted(data: &Dataset, params: &BoostParams, seed: u64) -> Result<BoostedModel, SurrogateError> {
    params.check()?;
    let n = data.len();
    if n == 0 {
        return Err(SurrogateError::TooFewRows { need: 1, got: 0 });
    }
    let tree_params = params.tree_params();
    let lr = params.learning_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = match data.weights() {
        Some(ws) => ws.to_vec(),
        None => vec![1.0; n],
    };
    normalize(&mut w);

    let mut stages: Vec<Stage> = Vec::with_capacity(params.n_estimators);
    let mut err = vec![0.0; n];
    for _ in 0..params.n_estimators {
        let dist = WeightedIndex::new(&w)
            .map_err(|e| SurrogateError::InvalidData(format!("sample weights: {e}")))?;
        let sample: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let tree = fit_tree_on(data, &sample, None, &tree_params)?;

        let mut max_err = 0.0f64;
        for (i, e) in err.iter_mut().enumerate() {
            *e = (tree.predict_unchecked(data.row(i)) - data.targets()[i]).abs();
            max_err = max_err.max(*e);
        }
        if max_err == 0.0 {
            stages.push(Stage { weight: 1.0, tree });
            break;
        }
        let mean_loss: f64 = err.iter().zip(&w).map(|(e, wi)| wi * e / max_err).sum();
        if mean_loss >= 0.5 {
            if stages.is_empty() {
                stages.push(Stage { weight: 1.0, tree });
            }
            break;
        }
        let beta = mean_loss / (1.0 - mean_loss);
        stages.push(Stage {
            weight: lr * (1.0 / beta).ln(),
            tree,
        });
        for (wi, e) in w.iter_mut().zip(&err) {
            *wi *= beta.powf((1.0 - e / max_err) * lr);
        }
        if !normalize(&mut w) {
            break;
        }
    }

    Ok(BoostedModel {
        format: MODEL_FORMAT.to_string(),
        feature_names: data.feature_names().to_vec(),
        params: *params,
        loss: "linear".to_string(),
        seed,
        training_rows: n,
        stages,
    })
}

/// Scales to unit sum; false if the weights collapsed to zero.
fn normalize(w: &mut [f64]) -> bool {
    let total: f64 = w.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return false;
    }
    w.iter_mut().for_each(|x| *x /= total);
    true
}

impl BoostedModel {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn params(&self) -> &BoostParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn training_rows(&self) -> usize {
        self.training_rows
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Weighted median of the stage predictions: the smallest prediction
    /// whose cumulative stage weight reaches half the total.
    pub fn predict(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        check_arity(self.feature_names.len(), x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut preds: Vec<(f64, f64)> = self
            .stages
            .iter()
            .map(|s| (s.tree.predict_unchecked(x), s.weight))
            .collect();
        preds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = preds.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        for &(p, wt) in &preds {
            acc += wt;
            if acc >= 0.5 * total {
                return p;
            }
        }
        preds.last().map_or(0.0, |p| p.0)
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, SurrogateError> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SurrogateError> {
        let model: BoostedModel =
            serde_json::from_str(text).map_err(|e| SurrogateError::Persist(e.to_string()))?;
        if model.format != MODEL_FORMAT {
            return Err(SurrogateError::Persist(format!(
                "unsupported model format `{}`",
                model.format
            )));
        }
        if model.loss != "linear" {
            return Err(SurrogateError::Persist(format!("unsupported loss `{}`", model.loss)));
        }
        if model.stages.is_empty() {
            return Err(SurrogateError::Persist("model has no stages".into()));
        }
        for (i, s) in model.stages.iter().enumerate() {
            if !s.weight.is_finite() || s.weight < 0.0 {
                return Err(SurrogateError::Persist(format!("stage {i} has a bad weight")));
            }
            if s.tree.n_features() != model.feature_names.len() {
                return Err(SurrogateError::Persist(format!("stage {i} has wrong feature count")));
            }
            s.tree
                .check()
                .map_err(|e| SurrogateError::Persist(format!("stage {i}: {e}")))?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SurrogateError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SurrogateError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
