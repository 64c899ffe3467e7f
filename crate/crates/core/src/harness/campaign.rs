use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use super::{CampaignReport, HarnessError, Method, TraceReport};
use crate::annealer::{anneal, AnnealError, AnnealParams, SearchTrace};
use crate::evaluators::{EvalError, Evaluator};
use crate::space::{Configuration, ParameterSpace};

/// Evaluates every configuration of the space in enumeration order.
pub fn run_em<E: Evaluator + ?Sized>(space: &ParameterSpace, evaluator: &E) -> Result<CampaignReport, HarnessError> {
    let configs: Vec<Configuration> = space.enumerate().collect();
    evaluate_configs(space, evaluator, &configs, Method::Em)
}

/// Evaluates a fixed list of configurations.
///
/// Work is spread over several threads when the evaluator allows it; records
/// keep the input order regardless. On failure the error carries the records
/// that precede the first failing configuration.
pub fn evaluate_configs<E: Evaluator + ?Sized>(
    space: &ParameterSpace,
    evaluator: &E,
    configs: &[Configuration],
    method: Method,
) -> Result<CampaignReport, HarnessError> {
    let start = Instant::now();
    let n = configs.len();
    let workers = match evaluator.max_concurrency() {
        usize::MAX => std::thread::available_parallelism().map_or(1, |p| p.get()),
        limit => limit,
    }
    .clamp(1, n.max(1));

    let mut results: Vec<Option<Result<f64, EvalError>>> = (0..n).map(|_| None).collect();
    if workers == 1 {
        for (slot, c) in results.iter_mut().zip(configs) {
            let r = evaluator.evaluate(c);
            let failed = r.is_err();
            *slot = Some(r);
            if failed {
                break;
            }
        }
    } else {
        let stop = AtomicBool::new(false);
        let chunks: Vec<Vec<(usize, Result<f64, EvalError>)>> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let stop = &stop;
                    s.spawn(move || {
                        let mut out = Vec::new();
                        for i in (w..n).step_by(workers) {
                            if stop.load(Ordering::Relaxed) {
                                break;
                            }
                            let r = evaluator.evaluate(&configs[i]);
                            if r.is_err() {
                                stop.store(true, Ordering::Relaxed);
                            }
                            out.push((i, r));
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        });
        for (i, r) in chunks.into_iter().flatten() {
            results[i] = Some(r);
        }
    }

    let mut report = CampaignReport::new(space.name(), method, evaluator.describe(), space.cardinality());
    let mut failure = None;
    for (c, r) in configs.iter().zip(results) {
        match r {
            Some(Ok(v)) => report.push(space.assignment(c), v),
            Some(Err(e)) => {
                failure = Some(e);
                break;
            }
            // skipped after another worker failed
            None => break,
        }
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    match failure {
        Some(source) => Err(HarnessError::Partial {
            source,
            partial: Box::new(report),
        }),
        None if report.records.len() < n => Err(HarnessError::Report(
            "evaluation stopped early without an error".into(),
        )),
        None => Ok(report),
    }
}

/// Annealing search wrapped as a campaign.
pub fn run_aml<E: Evaluator + ?Sized>(
    space: &ParameterSpace,
    evaluator: &E,
    params: &AnnealParams,
) -> Result<CampaignReport, HarnessError> {
    let start = Instant::now();
    match anneal(space, evaluator, params) {
        Ok(trace) => {
            let mut report = aml_report(space, evaluator, &trace);
            report.wall_time_s = start.elapsed().as_secs_f64();
            Ok(report)
        }
        Err(AnnealError::Evaluation { source, partial }) => {
            let mut report = aml_report(space, evaluator, &partial);
            report.wall_time_s = start.elapsed().as_secs_f64();
            Err(HarnessError::Partial {
                source,
                partial: Box::new(report),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn aml_report<E: Evaluator + ?Sized>(space: &ParameterSpace, evaluator: &E, trace: &SearchTrace) -> CampaignReport {
    let mut report = CampaignReport::new(space.name(), Method::Aml, evaluator.describe(), space.cardinality());
    for s in trace.steps.iter().filter(|s| !s.cached) {
        report.push(space.assignment(&s.candidate), s.value);
    }
    report.trace = Some(TraceReport {
        params: trace.params,
        cooling_factor: trace.params.effective_cooling(),
        steps: trace.records(space),
    });
    report
}
