//! Discrete parameter spaces.
//!
//! A [`ParameterSpace`] is an ordered list of parameters, each with a finite,
//! ascending domain. Parameters are either free (searchable) or derived as the
//! complement to 100 of another parameter, which is how host/accelerator
//! workload fractions are expressed: only the host share is a search
//! dimension, the accelerator share follows from it.
//!
//! Configurations store one integer per parameter in space order. Numeric
//! parameters store their value, categorical parameters store their code
//! (the label's position in the declared label list).

use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const BUNDLED_IDA: &str = include_str!("../fixtures/ida.toml");
const BUNDLED_EMIL: &str = include_str!("../fixtures/emil.toml");
const BUNDLED_IDA_TABLE3: &str = include_str!("../fixtures/ida_table3.toml");

/// Total of a workload parameter and its derived complement.
pub const COMPLEMENT_TOTAL: i64 = 100;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("cannot read space definition: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed space definition: {0}")]
    Parse(String),
    #[error("invalid space definition: {0}")]
    Definition(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("unknown label `{label}` for parameter `{param}`")]
    UnknownLabel { param: String, label: String },
    #[error("value `{value}` is not valid for parameter `{param}`")]
    BadValue { param: String, value: String },
    #[error("missing value for parameter `{0}`")]
    Missing(String),
    #[error("invalid configuration: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("space has no free parameter with more than one value; no neighbor exists")]
    NoNeighbor,
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterKind {
    NumericRange,
    NumericLevels,
    Categorical,
}

impl ParameterKind {
    pub fn is_numeric(self) -> bool {
        !matches!(self, ParameterKind::Categorical)
    }
}

/// One parameter and its admissible values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDef {
    name: String,
    kind: ParameterKind,
    /// Ascending. Categorical codes are `0..labels.len()`.
    domain: Vec<i64>,
    labels: Vec<String>,
    derived_from: Option<usize>,
}

impl ParameterDef {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ParameterKind {
        self.kind
    }

    pub fn domain(&self) -> &[i64] {
        &self.domain
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of the source parameter when this one is a derived complement.
    pub fn derived_from(&self) -> Option<usize> {
        self.derived_from
    }

    pub fn is_free(&self) -> bool {
        self.derived_from.is_none()
    }

    fn position(&self, value: i64) -> Option<usize> {
        self.domain.binary_search(&value).ok()
    }

    /// Renders a stored value: the label for categorical parameters, the
    /// number otherwise.
    pub fn format_value(&self, value: i64) -> String {
        match self.kind {
            ParameterKind::Categorical => self
                .labels
                .get(value as usize)
                .cloned()
                .unwrap_or_else(|| value.to_string()),
            _ => value.to_string(),
        }
    }

    /// Accepts a label or an integer code for categorical parameters, an
    /// integer for numeric ones. The result is not checked against the domain.
    pub fn parse_value(&self, text: &str) -> Result<i64, SpaceError> {
        let text = text.trim();
        match self.kind {
            ParameterKind::Categorical => {
                if let Some(code) = self.labels.iter().position(|l| l == text) {
                    return Ok(code as i64);
                }
                match text.parse::<i64>() {
                    Ok(code) => Ok(code),
                    Err(_) => Err(SpaceError::UnknownLabel {
                        param: self.name.clone(),
                        label: text.to_string(),
                    }),
                }
            }
            _ => text.parse::<i64>().map_err(|_| SpaceError::BadValue {
                param: self.name.clone(),
                value: text.to_string(),
            }),
        }
    }
}

/// Value as written by users and in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Label(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Label(l) => f.write_str(l),
        }
    }
}

/// Parameter name to value, in space order.
pub type Assignment = IndexMap<String, ParamValue>;

/// A full assignment of values, one per parameter in space order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(Vec<i64>);

impl Configuration {
    /// Wraps raw values without validation; use [`ParameterSpace::validate`].
    pub fn from_values(values: Vec<i64>) -> Self {
        Configuration(values)
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> Option<i64> {
        self.0.get(index).copied()
    }
}

/// Numeric encoding of a configuration, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Arity { expected: usize, found: usize },
    OutOfDomain { param: String, value: i64 },
    Derived { param: String, expected: i64, found: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Arity { expected, found } => {
                write!(f, "expected {expected} values, found {found}")
            }
            Violation::OutOfDomain { param, value } => {
                write!(f, "{param}={value} is outside its domain")
            }
            Violation::Derived {
                param,
                expected,
                found,
            } => write!(f, "{param}={found} but its complement rule requires {expected}"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    name: String,
    parameters: Vec<ParameterFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParameterFile {
    name: String,
    kind: ParameterKind,
    #[serde(default)]
    values: Option<Vec<i64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    derived_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace {
    name: String,
    parameters: Vec<ParameterDef>,
    free: Vec<usize>,
}

impl ParameterSpace {
    /// Parses a space definition document (TOML).
    ///
    /// ```toml
    /// name = "ida"
    /// [[parameters]]
    /// name = "CPU-W"
    /// kind = "numeric-range"
    /// values = [0, 100]          # inclusive bounds
    /// [[parameters]]
    /// name = "GPU-W"
    /// kind = "numeric-range"
    /// derived_from = "CPU-W"     # GPU-W = 100 - CPU-W
    /// ```
    pub fn from_toml_str(text: &str) -> Result<Self, SpaceError> {
        let file: SpaceFile = toml::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    /// Host CPUs plus one GPU; only the workload split is tuned.
    pub fn ida() -> Self {
        Self::from_toml_str(BUNDLED_IDA).expect("bundled ida space is valid")
    }

    /// Host CPUs plus one many-core coprocessor; threads, affinities and the
    /// workload split are tuned.
    pub fn emil() -> Self {
        Self::from_toml_str(BUNDLED_EMIL).expect("bundled emil space is valid")
    }

    /// Looks up a bundled space by name: `ida`, `emil` or `ida-table3`.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ida" => Some(Self::ida()),
            "emil" => Some(Self::emil()),
            "ida-table3" => Some(Self::from_toml_str(BUNDLED_IDA_TABLE3).expect("bundled space is valid")),
            _ => None,
        }
    }

    fn from_file(file: SpaceFile) -> Result<Self, SpaceError> {
        let def_err = |m: String| SpaceError::Definition(m);
        if file.parameters.is_empty() {
            return Err(def_err(format!("space `{}` has no parameters", file.name)));
        }
        let mut params: Vec<ParameterDef> = Vec::with_capacity(file.parameters.len());
        let mut sources: Vec<Option<String>> = Vec::with_capacity(file.parameters.len());
        for p in &file.parameters {
            if params.iter().any(|q| q.name == p.name) {
                return Err(def_err(format!("duplicate parameter `{}`", p.name)));
            }
            let (domain, labels) = match (p.kind, &p.derived_from) {
                (ParameterKind::Categorical, Some(_)) => {
                    return Err(def_err(format!(
                        "categorical parameter `{}` cannot be derived",
                        p.name
                    )))
                }
                (ParameterKind::Categorical, None) => {
                    let labels = p.labels.clone().unwrap_or_default();
                    if p.values.is_some() {
                        return Err(def_err(format!(
                            "categorical parameter `{}` takes labels, not values",
                            p.name
                        )));
                    }
                    for (i, l) in labels.iter().enumerate() {
                        if labels[..i].contains(l) {
                            return Err(def_err(format!("duplicate label `{l}` in `{}`", p.name)));
                        }
                    }
                    ((0..labels.len() as i64).collect(), labels)
                }
                (_, Some(_)) => (Vec::new(), Vec::new()),
                (ParameterKind::NumericRange, None) => match p.values.as_deref() {
                    Some(&[lo, hi]) if lo <= hi => ((lo..=hi).collect(), Vec::new()),
                    _ => {
                        return Err(def_err(format!(
                            "numeric-range `{}` needs values = [min, max] with min <= max",
                            p.name
                        )))
                    }
                },
                (ParameterKind::NumericLevels, None) => {
                    let values = p.values.clone().unwrap_or_default();
                    if values.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(def_err(format!(
                            "numeric-levels `{}` must be strictly increasing",
                            p.name
                        )));
                    }
                    (values, Vec::new())
                }
            };
            if p.kind.is_numeric() && p.labels.is_some() {
                return Err(def_err(format!("numeric parameter `{}` takes no labels", p.name)));
            }
            if p.derived_from.is_none() && domain.is_empty() {
                return Err(def_err(format!("parameter `{}` has an empty domain", p.name)));
            }
            params.push(ParameterDef {
                name: p.name.clone(),
                kind: p.kind,
                domain,
                labels,
                derived_from: None,
            });
            sources.push(p.derived_from.clone());
        }

        for (i, source) in sources.iter().enumerate() {
            let Some(source) = source else { continue };
            let j = params
                .iter()
                .position(|q| &q.name == source)
                .ok_or_else(|| def_err(format!("`{}` is derived from unknown `{source}`", params[i].name)))?;
            if sources[j].is_some() {
                return Err(def_err(format!(
                    "`{}` is derived from `{source}`, which is itself derived",
                    params[i].name
                )));
            }
            let src = &params[j];
            if !src.kind.is_numeric() {
                return Err(def_err(format!("complement source `{source}` must be numeric")));
            }
            if src.domain.iter().any(|&v| !(0..=COMPLEMENT_TOTAL).contains(&v)) {
                return Err(def_err(format!(
                    "complement source `{source}` must lie within 0..={COMPLEMENT_TOTAL}"
                )));
            }
            let mut domain: Vec<i64> = src.domain.iter().map(|v| COMPLEMENT_TOTAL - v).collect();
            domain.sort_unstable();
            if let Some(given) = &file.parameters[i].values {
                let expanded: Vec<i64> = match params[i].kind {
                    ParameterKind::NumericRange => match given.as_slice() {
                        &[lo, hi] => (lo..=hi).collect(),
                        _ => given.clone(),
                    },
                    _ => given.clone(),
                };
                if expanded != domain {
                    return Err(def_err(format!(
                        "declared values of `{}` disagree with its complement rule",
                        params[i].name
                    )));
                }
            }
            params[i].domain = domain;
            params[i].derived_from = Some(j);
        }

        let free = (0..params.len()).filter(|&i| params[i].is_free()).collect();
        Ok(ParameterSpace {
            name: file.name,
            parameters: params,
            free,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &[ParameterDef] {
        &self.parameters
    }

    pub fn parameter_names(&self) -> Vec<&str> {
        self.parameters.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    /// Indices of the free parameters, in space order.
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// The same space with one free parameter pinned to a single value.
    /// Configurations of the result are valid in `self`.
    pub fn restrict(&self, name: &str, value: i64) -> Result<ParameterSpace, SpaceError> {
        let index = self
            .index_of(name)
            .ok_or_else(|| SpaceError::UnknownParameter(name.to_string()))?;
        let p = &self.parameters[index];
        if !p.is_free() || p.position(value).is_none() {
            return Err(SpaceError::BadValue {
                param: name.to_string(),
                value: value.to_string(),
            });
        }
        let mut out = self.clone();
        out.parameters[index].domain = vec![value];
        for q in out.parameters.iter_mut() {
            if q.derived_from == Some(index) {
                q.domain = vec![COMPLEMENT_TOTAL - value];
            }
        }
        Ok(out)
    }

    /// The host workload parameter: the free source of a complement rule.
    pub fn workload_parameter(&self) -> Option<usize> {
        self.parameters.iter().find_map(|p| p.derived_from)
    }

    /// Number of distinct configurations: the product of free domain sizes.
    /// Saturates at `u64::MAX`.
    pub fn cardinality(&self) -> u64 {
        self.free
            .iter()
            .fold(1u64, |acc, &i| acc.saturating_mul(self.parameters[i].domain.len() as u64))
    }

    fn fill_derived(&self, values: &mut [i64]) {
        for (i, p) in self.parameters.iter().enumerate() {
            if let Some(src) = p.derived_from {
                values[i] = COMPLEMENT_TOTAL - values[src];
            }
        }
    }

    /// Builds the configuration whose free parameters sit at the given domain
    /// positions (one per free parameter).
    fn config_from_positions(&self, positions: &[usize]) -> Configuration {
        let mut values = vec![0; self.parameters.len()];
        for (&i, &pos) in self.free.iter().zip(positions) {
            values[i] = self.parameters[i].domain[pos];
        }
        self.fill_derived(&mut values);
        Configuration(values)
    }

    /// The configuration at position `index` of [`Self::enumerate`].
    pub fn config_at(&self, mut index: u64) -> Option<Configuration> {
        if index >= self.cardinality() {
            return None;
        }
        let mut positions = vec![0; self.free.len()];
        for (slot, &i) in self.free.iter().enumerate().rev() {
            let size = self.parameters[i].domain.len() as u64;
            positions[slot] = (index % size) as usize;
            index /= size;
        }
        Some(self.config_from_positions(&positions))
    }

    /// Every valid configuration exactly once, lexicographic in domain order
    /// with the first parameter varying slowest.
    pub fn enumerate(&self) -> Enumerate<'_> {
        Enumerate {
            space: self,
            positions: vec![0; self.free.len()],
            done: false,
        }
    }

    pub fn validate(&self, config: &Configuration) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        if config.0.len() != self.parameters.len() {
            violations.push(Violation::Arity {
                expected: self.parameters.len(),
                found: config.0.len(),
            });
            return Err(violations);
        }
        for (p, &v) in self.parameters.iter().zip(&config.0) {
            if p.position(v).is_none() {
                violations.push(Violation::OutOfDomain {
                    param: p.name.clone(),
                    value: v,
                });
            }
        }
        for (i, p) in self.parameters.iter().enumerate() {
            if let Some(src) = p.derived_from {
                let expected = COMPLEMENT_TOTAL - config.0[src];
                if config.0[i] != expected {
                    violations.push(Violation::Derived {
                        param: p.name.clone(),
                        expected,
                        found: config.0[i],
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Draws every free parameter uniformly from its domain.
    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> Configuration {
        let positions: Vec<usize> = self
            .free
            .iter()
            .map(|&i| rng.gen_range(0..self.parameters[i].domain.len()))
            .collect();
        self.config_from_positions(&positions)
    }

    /// Changes exactly one free parameter.
    ///
    /// The parameter is uniform among free parameters with more than one
    /// value. Ordered (numeric) parameters step to an adjacent level with
    /// probability 1/2 and otherwise jump to a uniformly chosen other level;
    /// categorical parameters move to a uniformly chosen other code.
    pub fn neighbor<R: Rng + ?Sized>(
        &self,
        current: &Configuration,
        rng: &mut R,
    ) -> Result<Configuration, SpaceError> {
        self.validate(current).map_err(SpaceError::Invalid)?;
        let movable: Vec<usize> = self
            .free
            .iter()
            .copied()
            .filter(|&i| self.parameters[i].domain.len() > 1)
            .collect();
        if movable.is_empty() {
            return Err(SpaceError::NoNeighbor);
        }
        let param_idx = movable[rng.gen_range(0..movable.len())];
        let p = &self.parameters[param_idx];
        let size = p.domain.len();
        let at = p.position(current.0[param_idx]).expect("validated");

        let adjacent_step = p.kind.is_numeric() && rng.gen_bool(0.5);
        let next = if adjacent_step {
            match (at > 0, at + 1 < size) {
                (true, true) => {
                    if rng.gen_bool(0.5) {
                        at - 1
                    } else {
                        at + 1
                    }
                }
                (true, false) => at - 1,
                (false, _) => at + 1,
            }
        } else {
            // uniform over the other size-1 positions
            let r = rng.gen_range(0..size - 1);
            if r >= at {
                r + 1
            } else {
                r
            }
        };

        let mut values = current.0.clone();
        values[param_idx] = p.domain[next];
        self.fill_derived(&mut values);
        Ok(Configuration(values))
    }

    /// Sets one parameter and refreshes derived values. Fails when the value
    /// is outside the domain or the parameter is derived.
    pub fn with_value(
        &self,
        config: &Configuration,
        index: usize,
        value: i64,
    ) -> Result<Configuration, SpaceError> {
        let p = self
            .parameters
            .get(index)
            .ok_or_else(|| SpaceError::UnknownParameter(index.to_string()))?;
        if !p.is_free() || p.position(value).is_none() {
            return Err(SpaceError::BadValue {
                param: p.name.clone(),
                value: value.to_string(),
            });
        }
        let mut values = config.0.clone();
        values[index] = value;
        self.fill_derived(&mut values);
        Ok(Configuration(values))
    }

    pub fn encode(&self, config: &Configuration) -> Result<FeatureVector, SpaceError> {
        self.validate(config).map_err(SpaceError::Invalid)?;
        Ok(FeatureVector(config.0.iter().map(|&v| v as f64).collect()))
    }

    /// Inverse of [`Self::encode`].
    pub fn decode(&self, features: &FeatureVector) -> Result<Configuration, SpaceError> {
        let mut values = Vec::with_capacity(features.len());
        for (i, &x) in features.0.iter().enumerate() {
            if x.fract() != 0.0 || !x.is_finite() {
                let name = self.parameters.get(i).map_or("?", |p| p.name.as_str());
                return Err(SpaceError::BadValue {
                    param: name.to_string(),
                    value: x.to_string(),
                });
            }
            values.push(x as i64);
        }
        let config = Configuration(values);
        self.validate(&config).map_err(SpaceError::Invalid)?;
        Ok(config)
    }

    /// Resolves named values (labels or codes) into a configuration. Derived
    /// parameters may be omitted; when present they must agree with the rule.
    pub fn resolve<'a, I>(&self, pairs: I) -> Result<Configuration, SpaceError>
    where
        I: IntoIterator<Item = (&'a str, &'a ParamValue)>,
    {
        let mut slots: Vec<Option<i64>> = vec![None; self.parameters.len()];
        for (name, value) in pairs {
            let i = self
                .index_of(name)
                .ok_or_else(|| SpaceError::UnknownParameter(name.to_string()))?;
            let p = &self.parameters[i];
            let code = match value {
                ParamValue::Int(v) => *v,
                ParamValue::Label(l) => p.parse_value(l)?,
            };
            slots[i] = Some(code);
        }
        let mut values = Vec::with_capacity(slots.len());
        for (i, slot) in slots.iter().enumerate() {
            let p = &self.parameters[i];
            match (slot, p.derived_from) {
                (Some(v), _) => values.push(*v),
                (None, Some(src)) => match slots[src] {
                    Some(s) => values.push(COMPLEMENT_TOTAL - s),
                    None => return Err(SpaceError::Missing(self.parameters[src].name.clone())),
                },
                (None, None) => return Err(SpaceError::Missing(p.name.clone())),
            }
        }
        let config = Configuration(values);
        self.validate(&config).map_err(SpaceError::Invalid)?;
        Ok(config)
    }

    /// Parses `NAME=VALUE` pairs separated by commas, e.g.
    /// `CPU-T=24,CPU-A=scatter,CPU-W=60`.
    pub fn parse_assignment(&self, text: &str) -> Result<Configuration, SpaceError> {
        let mut pairs = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) = part.split_once('=').ok_or_else(|| SpaceError::BadValue {
                param: part.to_string(),
                value: String::new(),
            })?;
            pairs.push((name.trim().to_string(), ParamValue::Label(value.trim().to_string())));
        }
        self.resolve(pairs.iter().map(|(n, v)| (n.as_str(), v)))
    }

    /// Labels and codes of a user-facing assignment mapped to features.
    pub fn encode_assignment(&self, assignment: &Assignment) -> Result<FeatureVector, SpaceError> {
        let config = self.resolve(assignment.iter().map(|(k, v)| (k.as_str(), v)))?;
        self.encode(&config)
    }

    /// Named view of a configuration; categorical values become labels.
    pub fn assignment(&self, config: &Configuration) -> Assignment {
        self.parameters
            .iter()
            .zip(&config.0)
            .map(|(p, &v)| {
                let value = match p.kind {
                    ParameterKind::Categorical => match p.labels.get(v as usize) {
                        Some(l) => ParamValue::Label(l.clone()),
                        None => ParamValue::Int(v),
                    },
                    _ => ParamValue::Int(v),
                };
                (p.name.clone(), value)
            })
            .collect()
    }

    /// `NAME=VALUE` rendering, the inverse of [`Self::parse_assignment`].
    pub fn describe(&self, config: &Configuration) -> String {
        self.parameters
            .iter()
            .zip(&config.0)
            .map(|(p, &v)| format!("{}={}", p.name, p.format_value(v)))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Iterator returned by [`ParameterSpace::enumerate`].
pub struct Enumerate<'a> {
    space: &'a ParameterSpace,
    positions: Vec<usize>,
    done: bool,
}

impl Iterator for Enumerate<'_> {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        if self.done {
            return None;
        }
        let config = self.space.config_from_positions(&self.positions);
        // odometer, last free parameter fastest
        self.done = true;
        for slot in (0..self.positions.len()).rev() {
            let size = self.space.parameters[self.space.free[slot]].domain.len();
            if self.positions[slot] + 1 < size {
                self.positions[slot] += 1;
                self.done = false;
                break;
            }
            self.positions[slot] = 0;
        }
        Some(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn single(values: &str) -> ParameterSpace {
        ParameterSpace::from_toml_str(&format!(
            "name = \"t\"\n[[parameters]]\nname = \"CPU-T\"\nkind = \"numeric-levels\"\nvalues = {values}\n"
        ))
        .unwrap()
    }

    #[test]
    fn cardinality_of_bundled_spaces() {
        assert_eq!(ParameterSpace::ida().cardinality(), 101);
        assert_eq!(single("[7]").cardinality(), 1);
        // 4 * 4 * 3 * 3 * 101 by direct product over the declared domains
        let emil = ParameterSpace::emil();
        let by_hand: u64 = [4u64, 4, 3, 3, 101].iter().product();
        assert_eq!(by_hand, 14544);
        assert_eq!(emil.cardinality(), by_hand);
        assert_eq!(emil.enumerate().count() as u64, by_hand);
    }

    #[test]
    fn enumerate_orders_lexicographically() {
        let s = single("[12, 24]");
        let all: Vec<_> = s.enumerate().map(|c| c.values().to_vec()).collect();
        assert_eq!(all, vec![vec![12], vec![24]]);

        let ida = ParameterSpace::ida();
        let configs: Vec<_> = ida.enumerate().collect();
        assert_eq!(configs.len(), 101);
        assert_eq!(configs.iter().collect::<HashSet<_>>().len(), 101);
        assert_eq!(configs[60].values(), &[60, 40]);
        for (i, c) in configs.iter().enumerate() {
            assert_eq!(ida.config_at(i as u64).as_ref(), Some(c));
        }
        assert!(ida.config_at(101).is_none());
    }

    #[test]
    fn validate_reports_violations() {
        let ida = ParameterSpace::ida();
        assert!(ida.validate(&Configuration::from_values(vec![60, 40])).is_ok());
        let err = ida.validate(&Configuration::from_values(vec![60, 50])).unwrap_err();
        assert!(matches!(err.as_slice(), [Violation::Derived { expected: 40, found: 50, .. }]));

        let emil = ParameterSpace::emil();
        let mut cfg = emil.config_at(0).unwrap().values().to_vec();
        cfg[0] = 13;
        let err = emil.validate(&Configuration::from_values(cfg)).unwrap_err();
        assert!(matches!(&err[0], Violation::OutOfDomain { param, value: 13 } if param == "CPU-T"));

        let err = ida.validate(&Configuration::from_values(vec![60])).unwrap_err();
        assert!(matches!(err[0], Violation::Arity { expected: 2, found: 1 }));
    }

    #[test]
    fn encode_uses_table_codes() {
        let emil = ParameterSpace::emil();
        let cfg = emil
            .parse_assignment("CPU-T=24,ACC-T=120,CPU-A=scatter,ACC-A=balanced,CPU-W=60")
            .unwrap();
        let x = emil.encode(&cfg).unwrap();
        assert_eq!(x.as_slice(), &[24.0, 120.0, 1.0, 0.0, 60.0, 40.0]);
        assert_eq!(emil.decode(&x).unwrap(), cfg);
        assert_eq!(
            emil.describe(&cfg),
            "CPU-T=24,ACC-T=120,CPU-A=scatter,ACC-A=balanced,CPU-W=60,ACC-W=40"
        );

        let mut a = emil.assignment(&cfg);
        a.insert("CPU-A".into(), ParamValue::Label("spread".into()));
        assert!(matches!(
            emil.encode_assignment(&a),
            Err(SpaceError::UnknownLabel { ref label, .. }) if label == "spread"
        ));
    }

    #[test]
    fn random_and_neighbor_are_seeded() {
        let emil = ParameterSpace::emil();
        let a = emil.random_config(&mut ChaCha8Rng::seed_from_u64(3));
        let b = emil.random_config(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        let na = emil.neighbor(&a, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let nb = emil.neighbor(&a, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(na, nb);
    }

    #[test]
    fn degenerate_spaces() {
        let s = single("[7]");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(s.random_config(&mut rng).values(), &[7]);
        assert!(matches!(
            s.neighbor(&Configuration::from_values(vec![7]), &mut rng),
            Err(SpaceError::NoNeighbor)
        ));

        let two = single("[12, 24]");
        let n = two.neighbor(&Configuration::from_values(vec![12]), &mut rng).unwrap();
        assert_eq!(n.values(), &[24]);
    }

    #[test]
    fn restriction_pins_a_parameter() {
        let emil = ParameterSpace::emil();
        let narrow = emil.restrict("CPU-T", 36).unwrap();
        assert_eq!(narrow.cardinality(), emil.cardinality() / 4);
        assert!(narrow.enumerate().all(|c| c.values()[0] == 36 && emil.validate(&c).is_ok()));

        let ida = ParameterSpace::ida().restrict("CPU-W", 30).unwrap();
        let only: Vec<Configuration> = ida.enumerate().collect();
        assert_eq!(only, vec![Configuration::from_values(vec![30, 70])]);

        assert!(emil.restrict("ACC-W", 10).is_err());
        assert!(emil.restrict("CPU-T", 13).is_err());
        assert!(emil.restrict("NOPE", 1).is_err());
    }

    #[test]
    fn rejects_bad_definitions() {
        let bad = [
            "name='x'\nparameters=[]",
            "name='x'\n[[parameters]]\nname='a'\nkind='numeric-levels'\nvalues=[1,1]",
            "name='x'\n[[parameters]]\nname='a'\nkind='numeric-levels'\nvalues=[]",
            "name='x'\n[[parameters]]\nname='a'\nkind='numeric-range'\nvalues=[0,100]\n[[parameters]]\nname='b'\nkind='numeric-range'\nderived_from='c'",
            "name='x'\n[[parameters]]\nname='a'\nkind='numeric-range'\nvalues=[0,200]\n[[parameters]]\nname='b'\nkind='numeric-range'\nderived_from='a'",
            "name='x'\n[[parameters]]\nname='a'\nkind='categorical'\nlabels=['u','u']",
            "name='x'\n[[parameters]]\nname='a'\nkind='numeric-levels'\nvalues=[1]\n[[parameters]]\nname='a'\nkind='numeric-levels'\nvalues=[2]",
        ];
        for text in bad {
            assert!(ParameterSpace::from_toml_str(text).is_err(), "accepted: {text}");
        }
    }

    #[test]
    fn resolve_fills_and_checks_complement() {
        let ida = ParameterSpace::ida();
        assert_eq!(ida.parse_assignment("CPU-W=60").unwrap().values(), &[60, 40]);
        assert!(ida.parse_assignment("CPU-W=60,GPU-W=50").is_err());
        assert!(matches!(ida.parse_assignment("GPU-W=50"), Err(SpaceError::Missing(_))));
        assert!(matches!(
            ida.parse_assignment("CPU-X=1"),
            Err(SpaceError::UnknownParameter(_))
        ));
    }
}
