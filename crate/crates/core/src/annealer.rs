//! Simulated annealing over a parameter space, maximizing efficiency.
//!
//! The search first evaluates the host-only and accelerator-only variants of
//! a random starting point, then the starting point itself, and then walks
//! one-parameter neighbors while the temperature stays above 1. Better
//! candidates are always accepted; worse ones with probability `exp(Δ/T)`,
//! where Δ is the change relative to the best value seen so far.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluators::{EvalError, Evaluator};
use crate::space::{Assignment, Configuration, ParameterSpace, SpaceError, COMPLEMENT_TOTAL};

/// Floor for the normalizing magnitude in Δ.
pub const DELTA_EPSILON: f64 = 1e-9;

/// Slack on the `T > 1` loop test so a budget-derived schedule runs exactly
/// `B` steps despite rounding in the repeated products.
const TEMPERATURE_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnnealError {
    #[error("invalid annealing parameters: {0}")]
    InvalidParams(String),
    #[error("space `{0}` has no free parameter")]
    NoFreeParameter(String),
    #[error("non-finite value in acceptance test")]
    NonFinite,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("evaluation failed after {} steps: {source}", partial.steps.len())]
    Evaluation {
        source: EvalError,
        partial: Box<SearchTrace>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub initial_temperature: f64,
    pub cooling_factor: f64,
    /// Cap on distinct configurations evaluated by the loop. When set, the
    /// cooling factor is replaced by `T0^(-1/B)`.
    pub evaluation_budget: Option<u64>,
    pub seed: u64,
    /// Multiplier on the relative change before the Boltzmann test; 100
    /// expresses Δ in percent.
    pub delta_scale: f64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams {
            initial_temperature: 1000.0,
            cooling_factor: 0.95,
            evaluation_budget: None,
            seed: 0,
            delta_scale: 100.0,
        }
    }
}

impl AnnealParams {
    pub fn with_budget(budget: u64, seed: u64) -> Self {
        AnnealParams {
            evaluation_budget: Some(budget),
            seed,
            ..AnnealParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), AnnealError> {
        let bad = |m: &str| Err(AnnealError::InvalidParams(m.to_string()));
        if !(self.initial_temperature.is_finite() && self.initial_temperature > 1.0) {
            return bad("initial temperature must exceed 1");
        }
        if self.evaluation_budget.is_none() && !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return bad("cooling factor must lie strictly between 0 and 1");
        }
        if self.evaluation_budget == Some(0) {
            return bad("evaluation budget must be positive");
        }
        if !(self.delta_scale.is_finite() && self.delta_scale > 0.0) {
            return bad("delta scale must be positive");
        }
        Ok(())
    }

    /// The cooling factor actually used.
    pub fn effective_cooling(&self) -> f64 {
        match self.evaluation_budget {
            Some(b) => self.initial_temperature.powf(-1.0 / b as f64),
            None => self.cooling_factor,
        }
    }
}

/// Boltzmann acceptance for maximization.
///
/// `Δ = scale · (candidate − current) / max(|best|, ε)`; returns 1 when
/// `Δ ≥ 0`, otherwise `exp(Δ / T)`.
pub fn acceptance_probability(
    current: f64,
    candidate: f64,
    best: f64,
    temperature: f64,
    delta_scale: f64,
) -> Result<f64, AnnealError> {
    if ![current, candidate, best, temperature, delta_scale].iter().all(|v| v.is_finite()) {
        return Err(AnnealError::NonFinite);
    }
    if temperature <= 0.0 {
        return Err(AnnealError::InvalidParams("temperature must be positive".into()));
    }
    let delta = delta_scale * (candidate - current) / best.abs().max(DELTA_EPSILON);
    if delta >= 0.0 {
        return Ok(1.0);
    }
    Ok((delta / temperature).exp().clamp(0.0, 1.0))
}

pub fn cooling_step(temperature: f64, alpha: f64) -> f64 {
    alpha * temperature
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    CpuOnly,
    AcceleratorOnly,
    Initial,
    Neighbor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStep {
    pub index: usize,
    pub kind: StepKind,
    pub temperature: f64,
    pub candidate: Configuration,
    pub value: f64,
    pub accepted: bool,
    pub acceptance_probability: f64,
    /// Value came from the per-run memo rather than the evaluator.
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTrace {
    pub steps: Vec<SearchStep>,
    pub winner: Option<(Configuration, f64)>,
    /// Distinct configurations handed to the evaluator.
    pub evaluations_used: u64,
    pub params: AnnealParams,
}

impl SearchTrace {
    /// Best value after each step.
    pub fn running_best(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.steps
            .iter()
            .map(|s| {
                best = best.max(s.value);
                best
            })
            .collect()
    }

    /// One JSON object per line, one line per step.
    pub fn write_jsonl<W: Write>(&self, space: &ParameterSpace, mut out: W) -> std::io::Result<()> {
        for record in self.records(space) {
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn records(&self, space: &ParameterSpace) -> Vec<StepRecord> {
        self.steps
            .iter()
            .map(|s| StepRecord {
                index: s.index,
                kind: s.kind,
                temperature: s.temperature,
                candidate: space.assignment(&s.candidate),
                value: s.value,
                acceptance_probability: s.acceptance_probability,
                accepted: s.accepted,
                cached: s.cached,
            })
            .collect()
    }
}

/// Serialized form of a [`SearchStep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub kind: StepKind,
    pub temperature: f64,
    pub candidate: Assignment,
    pub value: f64,
    pub acceptance_probability: f64,
    pub accepted: bool,
    pub cached: bool,
}

struct Run<'a, E: ?Sized> {
    evaluator: &'a E,
    memo: HashMap<Configuration, f64>,
    trace: SearchTrace,
}

impl<E: Evaluator + ?Sized> Run<'_, E> {
    /// Returns the value and whether it was memoized.
    fn value(&mut self, config: &Configuration) -> Result<(f64, bool), EvalError> {
        if let Some(&v) = self.memo.get(config) {
            return Ok((v, true));
        }
        self.trace.evaluations_used += 1;
        let v = self.evaluator.evaluate(config)?;
        if !v.is_finite() {
            return Err(EvalError::Setup(format!("evaluator returned non-finite value {v}")));
        }
        self.memo.insert(config.clone(), v);
        Ok((v, false))
    }

    fn record(&mut self, step: SearchStep) {
        let better = match &self.trace.winner {
            None => true,
            Some((_, w)) => step.value > *w,
        };
        if better {
            self.trace.winner = Some((step.candidate.clone(), step.value));
        }
        self.trace.steps.push(step);
    }

    fn fail(self, source: EvalError) -> AnnealError {
        AnnealError::Evaluation {
            source,
            partial: Box::new(self.trace),
        }
    }
}

/// Runs the search. Evaluator failures abort it, returning the partial trace
/// inside the error.
pub fn anneal<E: Evaluator + ?Sized>(
    space: &ParameterSpace,
    evaluator: &E,
    params: &AnnealParams,
) -> Result<SearchTrace, AnnealError> {
    params.validate()?;
    if space.free_indices().is_empty() {
        return Err(AnnealError::NoFreeParameter(space.name().to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let alpha = params.effective_cooling();
    let t0 = params.initial_temperature;
    let mut run = Run {
        evaluator,
        memo: HashMap::new(),
        trace: SearchTrace {
            steps: Vec::new(),
            winner: None,
            evaluations_used: 0,
            params: *params,
        },
    };

    let start = space.random_config(&mut rng);
    let mut seeds = Vec::new();
    if let Some(w) = space.workload_parameter() {
        for (value, kind) in [(COMPLEMENT_TOTAL, StepKind::CpuOnly), (0, StepKind::AcceleratorOnly)] {
            if let Ok(c) = space.with_value(&start, w, value) {
                seeds.push((c, kind));
            }
        }
    }
    seeds.push((start, StepKind::Initial));

    let mut current = None;
    for (config, kind) in seeds {
        let (value, cached) = match run.value(&config) {
            Ok(v) => v,
            Err(e) => return Err(run.fail(e)),
        };
        let index = run.trace.steps.len();
        run.record(SearchStep {
            index,
            kind,
            temperature: t0,
            candidate: config.clone(),
            value,
            accepted: kind == StepKind::Initial,
            acceptance_probability: 1.0,
            cached,
        });
        if kind == StepKind::Initial {
            current = Some((config, value));
        }
    }
    let (mut cur, mut cur_value) = current.expect("initial point is always evaluated");

    let budget = params.evaluation_budget.unwrap_or(u64::MAX);
    let seed_evals = run.trace.evaluations_used;
    let mut temperature = t0;
    while temperature > 1.0 + TEMPERATURE_SLACK && run.trace.evaluations_used - seed_evals < budget {
        let candidate = match space.neighbor(&cur, &mut rng) {
            Ok(c) => c,
            Err(SpaceError::NoNeighbor) => break,
            Err(e) => return Err(e.into()),
        };
        let (value, cached) = match run.value(&candidate) {
            Ok(v) => v,
            Err(e) => return Err(run.fail(e)),
        };
        let best = run.trace.winner.as_ref().map_or(value, |w| w.1);
        let p = acceptance_probability(cur_value, value, best, temperature, params.delta_scale)?;
        // draw even when p = 1 so the random stream does not depend on values
        let u: f64 = rng.gen();
        let accepted = value > cur_value || u < p;
        let index = run.trace.steps.len();
        run.record(SearchStep {
            index,
            kind: StepKind::Neighbor,
            temperature,
            candidate: candidate.clone(),
            value,
            accepted,
            acceptance_probability: p,
            cached,
        });
        if accepted {
            cur = candidate;
            cur_value = value;
        }
        temperature = cooling_step(temperature, alpha);
    }
    Ok(run.trace)
}
