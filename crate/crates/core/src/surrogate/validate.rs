use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::boost::{fit_boosted, BoostParams, BoostedModel};
use super::tree::{fit_tree, RegressionTree, TreeParams};
use super::{Dataset, SurrogateError};

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2_score(actual: &[f64], predicted: &[f64]) -> Result<f64, SurrogateError> {
    if actual.len() != predicted.len() {
        return Err(SurrogateError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(SurrogateError::TooFewRows { need: 1, got: 0 });
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(SurrogateError::ConstantTargets);
    }
    let ss_res: f64 = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub rows: usize,
    /// `None` when the evaluated targets are constant.
    pub r2: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
}

impl ModelMetrics {
    pub fn compute(actual: &[f64], predicted: &[f64]) -> Result<Self, SurrogateError> {
        let r2 = match r2_score(actual, predicted) {
            Ok(v) => Some(v),
            Err(SurrogateError::ConstantTargets) => None,
            Err(e) => return Err(e),
        };
        let n = actual.len() as f64;
        let mae = actual.iter().zip(predicted).map(|(y, p)| (y - p).abs()).sum::<f64>() / n;
        let mse = actual.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / n;
        Ok(ModelMetrics {
            rows: actual.len(),
            r2,
            mae,
            rmse: mse.sqrt(),
        })
    }
}

/// Which learner to fit during validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Boosted(BoostParams),
    Tree(TreeParams),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Boosted(BoostedModel),
    Tree(RegressionTree),
}

impl ModelSpec {
    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<Fitted, SurrogateError> {
        match self {
            ModelSpec::Boosted(p) => fit_boosted(data, p, seed).map(Fitted::Boosted),
            ModelSpec::Tree(p) => fit_tree(data, p).map(Fitted::Tree),
        }
    }
}

impl Fitted {
    pub fn predict(&self, x: &[f64]) -> Result<f64, SurrogateError> {
        match self {
            Fitted::Boosted(m) => m.predict(x),
            Fitted::Tree(t) => t.predict(x),
        }
    }

    fn predict_rows(&self, data: &Dataset) -> Result<Vec<f64>, SurrogateError> {
        data.rows().iter().map(|r| self.predict(r)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub folds: Vec<ModelMetrics>,
    /// Mean of the per-fold R², or the R² of all out-of-fold predictions
    /// pooled together when some fold's R² is undefined.
    pub r2: f64,
    pub pooled: bool,
    pub mae: f64,
    pub rmse: f64,
}

/// Shuffled train/test index split; the training side gets `⌈f·n⌉` rows.
pub fn split_train_test(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), SurrogateError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SurrogateError::InvalidParameter(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n_train = ((train_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if n_train == 0 || n_train >= n {
        return Err(SurrogateError::TooFewRows { need: 2, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

/// Fits on a training split and scores on the held-out rest.
pub fn holdout(
    data: &Dataset,
    spec: &ModelSpec,
    train_fraction: f64,
    seed: u64,
) -> Result<ModelMetrics, SurrogateError> {
    let (train, test) = split_train_test(data.len(), train_fraction, seed)?;
    let model = spec.fit(&data.subset(&train), seed)?;
    let test = data.subset(&test);
    let pred = model.predict_rows(&test)?;
    ModelMetrics::compute(test.targets(), &pred)
}

/// K-fold cross-validation. Rows are shuffled once; the first `n mod k`
/// folds get one extra row. Folds are fitted in parallel.
pub fn kfold_cv(data: &Dataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<Validation, SurrogateError> {
    let n = data.len();
    if k < 2 {
        return Err(SurrogateError::InvalidParameter("k must be at least 2".into()));
    }
    if n < k {
        return Err(SurrogateError::TooFewRows { need: k, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let fold_seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();

    let mut bounds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        bounds.push((start, start + size));
        start += size;
    }

    type FoldResult = Result<(Vec<usize>, Vec<f64>), SurrogateError>;
    let run_fold = |f: usize| -> FoldResult {
        let (lo, hi) = bounds[f];
        let test: Vec<usize> = idx[lo..hi].to_vec();
        let train: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
        let model = spec.fit(&data.subset(&train), fold_seeds[f])?;
        let pred = model.predict_rows(&data.subset(&test))?;
        Ok((test, pred))
    };

    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(k);
    let results: Vec<FoldResult> = if workers <= 1 {
        (0..k).map(run_fold).collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let run_fold = &run_fold;
                    s.spawn(move || (w..k).step_by(workers).map(|f| (f, run_fold(f))).collect::<Vec<_>>())
                })
                .collect();
            let mut out: Vec<_> = handles
                .into_iter()
                .flat_map(|h| h.join().expect("fold worker panicked"))
                .collect();
            out.sort_by_key(|(f, _)| *f);
            out.into_iter().map(|(_, r)| r).collect()
        })
    };

    let mut folds = Vec::with_capacity(k);
    let mut all_actual = Vec::with_capacity(n);
    let mut all_pred = Vec::with_capacity(n);
    for r in results {
        let (test, pred) = r?;
        let actual: Vec<f64> = test.iter().map(|&i| data.targets()[i]).collect();
        folds.push(ModelMetrics::compute(&actual, &pred)?);
        all_actual.extend(actual);
        all_pred.extend(pred);
    }
    let pooled_metrics = ModelMetrics::compute(&all_actual, &all_pred)?;
    let per_fold: Option<Vec<f64>> = folds.iter().map(|m| m.r2).collect();
    let (r2, pooled) = match per_fold {
        Some(v) => (v.iter().sum::<f64>() / k as f64, false),
        None => (pooled_metrics.r2.ok_or(SurrogateError::ConstantTargets)?, true),
    };
    Ok(Validation {
        folds,
        r2,
        pooled,
        mae: pooled_metrics.mae,
        rmse: pooled_metrics.rmse,
    })
}
