use super::{Counter, EvalError, Evaluator};
use crate::space::{Configuration, ParameterSpace};
use crate::surrogate::BoostedModel;

/// Predicts efficiency with a trained boosted model.
#[derive(Debug)]
pub struct ModelEvaluator {
    model: BoostedModel,
    space: ParameterSpace,
    count: Counter,
}

impl ModelEvaluator {
    /// The model's feature names must be the space's parameter names, in order.
    pub fn new(model: BoostedModel, space: ParameterSpace) -> Result<Self, EvalError> {
        let names = space.parameter_names();
        if model.feature_names().iter().map(String::as_str).ne(names.iter().copied()) {
            return Err(EvalError::Setup(format!(
                "model features [{}] do not match space `{}` parameters [{}]",
                model.feature_names().join(", "),
                space.name(),
                names.join(", ")
            )));
        }
        Ok(ModelEvaluator {
            model,
            space,
            count: Counter::default(),
        })
    }

    pub fn model(&self) -> &BoostedModel {
        &self.model
    }
}

impl Evaluator for ModelEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError> {
        self.count.bump();
        let features = self.space.encode(config)?;
        Ok(self.model.predict(features.as_slice())?)
    }

    fn evaluation_count(&self) -> u64 {
        self.count.get()
    }

    fn describe(&self) -> String {
        format!("model ({} stages)", self.model.stages().len())
    }
}
