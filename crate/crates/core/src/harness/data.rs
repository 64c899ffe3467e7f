use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::evaluators::Oracle;
use crate::metrics::{derive_all, RawMeasurement};
use crate::space::ParameterSpace;
use crate::surrogate::{
    fit_boosted, holdout, kfold_cv, split_train_test, BoostParams, BoostedModel, Dataset, ModelMetrics,
    ModelSpec, SurrogateError,
};

/// Minimum log size accepted for training.
pub const MIN_TRAINING_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Full,
    /// `n` distinct configurations drawn uniformly; all of them if `n`
    /// reaches the cardinality.
    Random(u64),
}

/// One measurement per sampled configuration, in enumeration order.
pub fn gen_dataset(oracle: &Oracle, sampling: Sampling, seed: u64) -> Result<Vec<RawMeasurement>, HarnessError> {
    let space = oracle.space();
    let card = space.cardinality();
    let indices: Vec<u64> = match sampling {
        Sampling::Random(n) if n < card => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<u64> = match usize::try_from(card) {
                Ok(len) => rand::seq::index::sample(&mut rng, len, n as usize)
                    .into_iter()
                    .map(|i| i as u64)
                    .collect(),
                Err(_) => {
                    let mut set = BTreeSet::new();
                    while (set.len() as u64) < n {
                        set.insert(rand::Rng::gen_range(&mut rng, 0..card));
                    }
                    set.into_iter().collect()
                }
            };
            picked.sort_unstable();
            picked
        }
        _ => (0..card).collect(),
    };
    indices
        .into_iter()
        .map(|i| {
            let c = space.config_at(i).expect("index below cardinality");
            Ok(oracle.measure(&c)?)
        })
        .collect()
}

/// Features are the encoded configuration; the target is energy efficiency.
pub fn dataset_from_log(space: &ParameterSpace, rows: &[RawMeasurement]) -> Result<Dataset, HarnessError> {
    let mut features = Vec::with_capacity(rows.len());
    let mut targets = Vec::with_capacity(rows.len());
    for m in rows {
        features.push(space.encode(&m.config)?.0);
        targets.push(derive_all(m)?.energy_efficiency_mb_j);
    }
    let names = space.parameter_names().into_iter().map(str::to_string).collect();
    Ok(Dataset::new(names, features, targets)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationScheme {
    KFold(usize),
    /// Fraction of rows used for training; the rest is held out.
    Split(f64),
}

impl Default for ValidationScheme {
    fn default() -> Self {
        ValidationScheme::KFold(10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub rows: usize,
    pub scheme: ValidationScheme,
    pub params: BoostParams,
    pub seed: u64,
    /// Validation R²: mean over folds, or on the held-out split.
    pub r2: Option<f64>,
    /// Set when per-fold R² was undefined and out-of-fold predictions were
    /// scored together instead.
    pub pooled: bool,
    pub mae: f64,
    pub rmse: f64,
    pub folds: Vec<ModelMetrics>,
    pub train_rows: Option<usize>,
    pub test_rows: Option<usize>,
    /// Stages in the returned model, which is fitted on every row.
    pub stages: usize,
}

/// Validates with the chosen scheme, then fits the returned model on all rows.
pub fn train_model(
    space: &ParameterSpace,
    rows: &[RawMeasurement],
    params: &BoostParams,
    scheme: ValidationScheme,
    seed: u64,
) -> Result<(BoostedModel, TrainSummary), HarnessError> {
    if rows.len() < MIN_TRAINING_ROWS {
        return Err(SurrogateError::TooFewRows {
            need: MIN_TRAINING_ROWS,
            got: rows.len(),
        }
        .into());
    }
    let data = dataset_from_log(space, rows)?;
    let spec = ModelSpec::Boosted(*params);
    let mut summary = TrainSummary {
        rows: data.len(),
        scheme,
        params: *params,
        seed,
        r2: None,
        pooled: false,
        mae: 0.0,
        rmse: 0.0,
        folds: Vec::new(),
        train_rows: None,
        test_rows: None,
        stages: 0,
    };
    match scheme {
        ValidationScheme::KFold(k) => {
            let v = kfold_cv(&data, &spec, k, seed)?;
            summary.r2 = Some(v.r2);
            summary.pooled = v.pooled;
            summary.mae = v.mae;
            summary.rmse = v.rmse;
            summary.folds = v.folds;
        }
        ValidationScheme::Split(f) => {
            let (train, test) = split_train_test(data.len(), f, seed)?;
            let m = holdout(&data, &spec, f, seed)?;
            summary.r2 = m.r2;
            summary.mae = m.mae;
            summary.rmse = m.rmse;
            summary.train_rows = Some(train.len());
            summary.test_rows = Some(test.len());
        }
    }
    let model = fit_boosted(&data, params, seed)?;
    summary.stages = model.stages().len();
    Ok((model, summary))
}
