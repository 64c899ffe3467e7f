//! Bundled Ida PCC sweeps for 24 matrix sizes.
//!
//! The log holds one row per CPU-W value (0..=100) for each size. The choices
//! file records, per size, the CPU-W picked by exhaustive search and the one
//! picked by the annealing search.

use serde::Deserialize;

use super::{evaluate_configs, run_em, CampaignReport, HarnessError, Method};
use crate::evaluators::{Evaluator, ReplayEvaluator};
use crate::metrics::log::{read_log, LogError};
use crate::metrics::RawMeasurement;
use crate::space::ParameterSpace;

pub const LOG_CSV: &str = include_str!("../../fixtures/table3_ida.csv");
pub const CHOICES_CSV: &str = include_str!("../../fixtures/table3_choices.csv");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Choice {
    pub label: String,
    #[serde(rename = "ROWS")]
    pub rows: i64,
    #[serde(rename = "COLS")]
    pub cols: i64,
    pub em_cpu_w: i64,
    pub aml_cpu_w: i64,
}

pub fn space() -> ParameterSpace {
    ParameterSpace::builtin("ida-table3").expect("bundled")
}

pub fn log() -> Result<Vec<RawMeasurement>, HarnessError> {
    Ok(read_log(&space(), LOG_CSV.as_bytes())?)
}

pub fn choices() -> Result<Vec<Choice>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(CHOICES_CSV.as_bytes());
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                HarnessError::Log(LogError::Format {
                    line,
                    message: e.to_string(),
                })
            })
        })
        .collect()
}

pub fn replay() -> Result<ReplayEvaluator, HarnessError> {
    Ok(ReplayEvaluator::new(space(), log()?))
}

/// Per size: an exhaustive report over its 101 configurations and a report
/// holding the recorded annealing choice.
pub fn campaigns<E: Evaluator + ?Sized>(
    evaluator: &E,
) -> Result<(Vec<CampaignReport>, Vec<CampaignReport>), HarnessError> {
    let space = space();
    let mut em = Vec::new();
    let mut aml = Vec::new();
    for c in choices()? {
        let sub = space.restrict("ROWS", c.rows)?.restrict("COLS", c.cols)?;
        em.push(run_em(&sub, evaluator)?.with_label(&c.label));
        let pick = sub.parse_assignment(&format!("ROWS={},COLS={},CPU-W={}", c.rows, c.cols, c.aml_cpu_w))?;
        aml.push(evaluate_configs(&sub, evaluator, &[pick], Method::Aml)?.with_label(&c.label));
    }
    Ok((em, aml))
}
