use serde::{Deserialize, Serialize};

use super::{CampaignReport, HarnessError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub em_value: f64,
    pub aml_value: f64,
    /// `aml − em`.
    pub signed_difference: f64,
    pub abs_difference: f64,
    /// `100 · aml / em`; absent when `em ≤ 0`.
    pub aml_fraction_of_em: Option<f64>,
}

impl CompareRow {
    pub fn new(label: impl Into<String>, em_value: f64, aml_value: f64) -> Self {
        let signed = aml_value - em_value;
        CompareRow {
            label: label.into(),
            em_value,
            aml_value,
            signed_difference: signed,
            abs_difference: signed.abs(),
            aml_fraction_of_em: (em_value > 0.0).then(|| 100.0 * aml_value / em_value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub rows: usize,
    pub mean_abs_difference: f64,
    pub max_abs_difference: f64,
    pub max_abs_difference_label: String,
    pub mean_fraction: Option<f64>,
    pub min_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub summary: CompareSummary,
}

impl Comparison {
    /// Fixed-width text table.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16} {:>12} {:>12} {:>12} {:>9}\n", "label", "EM", "AML", "|diff|", "AML/EM");
        for r in &self.rows {
            let frac = r.aml_fraction_of_em.map_or("-".to_string(), |f| format!("{f:.2}%"));
            out.push_str(&format!(
                "{:<16} {:>12.5} {:>12.5} {:>12.5} {:>9}\n",
                r.label, r.em_value, r.aml_value, r.abs_difference, frac
            ));
        }
        let s = &self.summary;
        out.push_str(&format!(
            "rows {}  mean |diff| {:.5}  max |diff| {:.5} ({})",
            s.rows, s.mean_abs_difference, s.max_abs_difference, s.max_abs_difference_label
        ));
        if let (Some(mean), Some(min)) = (s.mean_fraction, s.min_fraction) {
            out.push_str(&format!("  AML/EM mean {mean:.2}% min {min:.2}%"));
        }
        out.push('\n');
        out
    }
}

fn label_of(r: &CampaignReport) -> String {
    r.label.clone().unwrap_or_else(|| r.space.clone())
}

/// Compares one EM report with one AML report over the same space.
pub fn compare_pair(em: &CampaignReport, aml: &CampaignReport) -> Result<CompareRow, HarnessError> {
    if em.space != aml.space {
        return Err(HarnessError::Mismatch(format!(
            "reports cover different spaces (`{}` vs `{}`)",
            em.space, aml.space
        )));
    }
    let (el, al) = (label_of(em), label_of(aml));
    if el != al {
        return Err(HarnessError::Mismatch(format!("labels differ (`{el}` vs `{al}`)")));
    }
    let value = |r: &CampaignReport| {
        r.best_value()
            .ok_or_else(|| HarnessError::Mismatch(format!("report `{}` has no evaluations", label_of(r))))
    };
    Ok(CompareRow::new(el, value(em)?, value(aml)?))
}

/// Pairs reports by label (position when labels are absent).
pub fn compare(em: &[CampaignReport], aml: &[CampaignReport]) -> Result<Comparison, HarnessError> {
    if em.len() != aml.len() {
        return Err(HarnessError::Mismatch(format!(
            "{} EM reports but {} AML reports",
            em.len(),
            aml.len()
        )));
    }
    if em.is_empty() {
        return Err(HarnessError::Mismatch("nothing to compare".into()));
    }
    let mut rows = Vec::with_capacity(em.len());
    for (i, e) in em.iter().enumerate() {
        let a = match &e.label {
            Some(l) => aml
                .iter()
                .find(|a| a.label.as_deref() == Some(l))
                .ok_or_else(|| HarnessError::Mismatch(format!("no AML report labelled `{l}`")))?,
            None => &aml[i],
        };
        rows.push(compare_pair(e, a)?);
    }
    let n = rows.len() as f64;
    let max = rows
        .iter()
        .fold(&rows[0], |m, r| if r.abs_difference > m.abs_difference { r } else { m });
    let fractions: Option<Vec<f64>> = rows.iter().map(|r| r.aml_fraction_of_em).collect();
    let summary = CompareSummary {
        rows: rows.len(),
        mean_abs_difference: rows.iter().map(|r| r.abs_difference).sum::<f64>() / n,
        max_abs_difference: max.abs_difference,
        max_abs_difference_label: max.label.clone(),
        mean_fraction: fractions.as_ref().map(|f| f.iter().sum::<f64>() / n),
        min_fraction: fractions.map(|f| f.into_iter().fold(f64::INFINITY, f64::min)),
    };
    Ok(Comparison { rows, summary })
}
