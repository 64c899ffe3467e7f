//! Synthetic measurement oracles with known optima.
//!
//! `ida-pcc` models a pairwise row-correlation job split by rows between CPU
//! and GPU; the CPU takes the leading rows, which carry the most pairs.
//! `emil-pm` models a pattern-matching job split linearly between a two
//! socket host and a many-core coprocessor, with thread count and affinity
//! shaping each unit's speed and power, plus a bounded, seeded ruggedness.
//!
//! Both oracles produce full [`RawMeasurement`]s so their rows can be logged
//! and replayed; efficiency is always computed by the metrics module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Counter, EvalError, Evaluator};
use crate::metrics::{energy_efficiency, RawMeasurement};
use crate::space::{Configuration, ParameterSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdaPccParams {
    pub rows: u64,
    pub cols: u64,
    /// CPU pair-comparison cells per second.
    pub cpu_cells_per_s: f64,
    /// GPU compute speed relative to the CPU.
    pub gpu_speedup: f64,
    /// Host to device bandwidth, bytes per second.
    pub bandwidth_bytes_s: f64,
    pub cpu_power_w: f64,
    pub gpu_compute_power_w: f64,
    pub gpu_transfer_power_w: f64,
    /// Slowdown per unit of CPU row share (memory contention).
    pub cpu_contention: f64,
    /// Slowdown per unit of GPU row share.
    pub gpu_contention: f64,
    pub rugged_amplitude: f64,
    pub seed: u64,
}

impl Default for IdaPccParams {
    fn default() -> Self {
        IdaPccParams {
            rows: 1024,
            cols: 8192,
            cpu_cells_per_s: 8e9,
            gpu_speedup: 20.0,
            bandwidth_bytes_s: 1.2e8,
            cpu_power_w: 12.0,
            gpu_compute_power_w: 250.0,
            gpu_transfer_power_w: 10.0,
            cpu_contention: 2.0,
            gpu_contention: 1.5,
            rugged_amplitude: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmilPmParams {
    pub input_mb: f64,
    /// MB/s per effective host core.
    pub cpu_rate: f64,
    /// MB/s per effective coprocessor core.
    pub acc_rate: f64,
    pub cpu_contention: f64,
    pub acc_contention: f64,
    pub bandwidth_mb_s: f64,
    pub transfer_power_w: f64,
    pub cpu_socket_power_w: f64,
    pub cpu_core_power_w: f64,
    pub cpu_thread_power_w: f64,
    pub acc_base_power_w: f64,
    pub acc_core_power_w: f64,
    pub acc_thread_power_w: f64,
    /// Speed multiplier for host threads without pinning.
    pub cpu_unpinned_factor: f64,
    /// Speed multiplier for coprocessor scatter affinity.
    pub acc_scatter_factor: f64,
    pub rugged_amplitude: f64,
    pub seed: u64,
}

impl Default for EmilPmParams {
    fn default() -> Self {
        EmilPmParams {
            input_mb: 3170.0,
            cpu_rate: 300.0,
            acc_rate: 200.0,
            cpu_contention: 1.0,
            acc_contention: 1.0,
            bandwidth_mb_s: 6000.0,
            transfer_power_w: 15.0,
            cpu_socket_power_w: 18.0,
            cpu_core_power_w: 3.0,
            cpu_thread_power_w: 0.4,
            acc_base_power_w: 60.0,
            acc_core_power_w: 1.4,
            acc_thread_power_w: 0.12,
            cpu_unpinned_factor: 0.9,
            acc_scatter_factor: 0.97,
            rugged_amplitude: 0.10,
            seed: 0,
        }
    }
}

const HOST_CORES: u64 = 24;
const HOST_CORES_PER_SOCKET: u64 = 12;
const HOST_SOCKETS: u64 = 2;
const ACC_CORES: u64 = 60;
/// Extra speed per additional hardware thread on a host core.
const HOST_SMT_GAIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum OracleSpec {
    IdaPcc(IdaPccParams),
    EmilPm(EmilPmParams),
}

impl OracleSpec {
    pub fn family(&self) -> &'static str {
        match self {
            OracleSpec::IdaPcc(_) => "ida-pcc",
            OracleSpec::EmilPm(_) => "emil-pm",
        }
    }

    pub fn check(&self) -> Result<(), EvalError> {
        let positive: Vec<(&str, f64)> = match self {
            OracleSpec::IdaPcc(p) => vec![
                ("rows", p.rows as f64),
                ("cols", p.cols as f64),
                ("cpu_cells_per_s", p.cpu_cells_per_s),
                ("gpu_speedup", p.gpu_speedup),
                ("bandwidth_bytes_s", p.bandwidth_bytes_s),
                ("cpu_power_w", p.cpu_power_w),
                ("gpu_compute_power_w", p.gpu_compute_power_w),
                ("gpu_transfer_power_w", p.gpu_transfer_power_w),
            ],
            OracleSpec::EmilPm(p) => vec![
                ("input_mb", p.input_mb),
                ("cpu_rate", p.cpu_rate),
                ("acc_rate", p.acc_rate),
                ("bandwidth_mb_s", p.bandwidth_mb_s),
                ("transfer_power_w", p.transfer_power_w),
                ("cpu_socket_power_w", p.cpu_socket_power_w),
                ("cpu_core_power_w", p.cpu_core_power_w),
                ("cpu_thread_power_w", p.cpu_thread_power_w),
                ("acc_base_power_w", p.acc_base_power_w),
                ("acc_core_power_w", p.acc_core_power_w),
                ("acc_thread_power_w", p.acc_thread_power_w),
                ("cpu_unpinned_factor", p.cpu_unpinned_factor),
                ("acc_scatter_factor", p.acc_scatter_factor),
            ],
        };
        if let OracleSpec::IdaPcc(p) = self {
            if p.rows < 2 {
                return Err(EvalError::Setup("ida-pcc needs at least 2 rows".into()));
            }
        }
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(EvalError::Setup(format!("{name} must be positive, got {v}")));
            }
        }
        let (amp, contention) = match self {
            OracleSpec::IdaPcc(p) => (p.rugged_amplitude, [p.cpu_contention, p.gpu_contention]),
            OracleSpec::EmilPm(p) => (p.rugged_amplitude, [p.cpu_contention, p.acc_contention]),
        };
        if !(0.0..1.0).contains(&amp) {
            return Err(EvalError::Setup(format!("rugged_amplitude must lie in [0, 1), got {amp}")));
        }
        if contention.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(EvalError::Setup("contention factors must be non-negative".into()));
        }
        Ok(())
    }
}

/// `ida-pcc`, `ida-pcc:RxC`, `emil-pm` or `emil-pm:MB`.
impl FromStr for OracleSpec {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (family, arg) = match s.split_once(':') {
            Some((f, a)) => (f, Some(a)),
            None => (s, None),
        };
        let bad = || EvalError::Setup(format!("cannot parse oracle `{s}`"));
        let spec = match family {
            "ida-pcc" => {
                let mut p = IdaPccParams::default();
                if let Some(a) = arg {
                    let (r, c) = a.split_once(['x', 'X']).ok_or_else(bad)?;
                    p.rows = r.trim().parse().map_err(|_| bad())?;
                    p.cols = c.trim().parse().map_err(|_| bad())?;
                }
                OracleSpec::IdaPcc(p)
            }
            "emil-pm" => {
                let mut p = EmilPmParams::default();
                if let Some(a) = arg {
                    p.input_mb = a.trim().parse().map_err(|_| bad())?;
                }
                OracleSpec::EmilPm(p)
            }
            _ => return Err(bad()),
        };
        spec.check()?;
        Ok(spec)
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::IdaPcc(p) => write!(f, "ida-pcc:{}x{}", p.rows, p.cols),
            OracleSpec::EmilPm(p) => write!(f, "emil-pm:{}", p.input_mb),
        }
    }
}

/// An oracle bound to the parameters of a particular space.
#[derive(Debug, Clone)]
pub struct Oracle {
    spec: OracleSpec,
    space: ParameterSpace,
    slots: Slots,
}

#[derive(Debug, Clone)]
enum Slots {
    Ida { cpu_w: usize },
    Emil { cpu_t: usize, acc_t: usize, cpu_a: usize, acc_a: usize, cpu_w: usize },
}

impl Oracle {
    pub fn new(spec: OracleSpec, space: ParameterSpace) -> Result<Self, EvalError> {
        spec.check()?;
        let find = |name: &str| {
            space.index_of(name).ok_or_else(|| {
                EvalError::Setup(format!(
                    "{} oracle needs parameter `{name}`, space `{}` lacks it",
                    spec.family(),
                    space.name()
                ))
            })
        };
        let slots = match &spec {
            OracleSpec::IdaPcc(_) => Slots::Ida { cpu_w: find("CPU-W")? },
            OracleSpec::EmilPm(_) => Slots::Emil {
                cpu_t: find("CPU-T")?,
                acc_t: find("ACC-T")?,
                cpu_a: find("CPU-A")?,
                acc_a: find("ACC-A")?,
                cpu_w: find("CPU-W")?,
            },
        };
        Ok(Oracle { spec, space, slots })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn space(&self) -> &ParameterSpace {
        &self.space
    }

    pub fn measure(&self, config: &Configuration) -> Result<RawMeasurement, EvalError> {
        self.space.validate(config).map_err(crate::space::SpaceError::Invalid)?;
        let v = config.values();
        let m = match (&self.spec, &self.slots) {
            (OracleSpec::IdaPcc(p), Slots::Ida { cpu_w }) => ida_measure(p, config, v[*cpu_w]),
            (OracleSpec::EmilPm(p), Slots::Emil { cpu_t, acc_t, cpu_a, acc_a, cpu_w }) => {
                let label = |i: usize| self.space.parameters()[i].format_value(v[i]);
                let host = host_layout(p, v[*cpu_t], &label(*cpu_a))?;
                let acc = acc_layout(p, v[*acc_t], &label(*acc_a))?;
                let keys = [[v[*cpu_t], v[*cpu_a]], [v[*acc_t], v[*acc_a]]];
                emil_measure(p, config, host, acc, v[*cpu_w], keys)
            }
            _ => unreachable!("slots follow the spec"),
        };
        m.validate()?;
        Ok(m)
    }
}

/// Pair comparisons owned by the CPU and the GPU for a CPU row share.
pub(crate) fn ida_pairs(rows: u64, cpu_w: i64) -> (u64, u64) {
    let k = cpu_rows(rows, cpu_w);
    // row i is compared against the rows after it
    let cpu = k * (2 * rows - k - 1) / 2;
    let total = rows * (rows.saturating_sub(1)) / 2;
    (cpu, total - cpu)
}

fn cpu_rows(rows: u64, cpu_w: i64) -> u64 {
    // ⌈w·R/100⌉ in integers
    let w = cpu_w.clamp(0, 100) as u64;
    (w * rows).div_ceil(100)
}

fn ida_measure(p: &IdaPccParams, config: &Configuration, cpu_w: i64) -> RawMeasurement {
    let (r, c) = (p.rows as f64, p.cols as f64);
    let k = cpu_rows(p.rows, cpu_w) as f64;
    let (cpu_pairs, acc_pairs) = ida_pairs(p.rows, cpu_w);
    let total_pairs = (cpu_pairs + acc_pairs) as f64;
    let workload_mb = r * c * 4.0 / 1e6;
    let cpu_mb = workload_mb * cpu_pairs as f64 / total_pairs;
    let acc_mb = workload_mb * acc_pairs as f64 / total_pairs;
    let noise = |unit: u64| 1.0 + p.rugged_amplitude * rugged(p.seed, unit, config.values());

    let mut m = RawMeasurement {
        config: config.clone(),
        workload_mb,
        cpu_time_s: 0.0,
        acc_time_s: 0.0,
        cpu_energy_j: 0.0,
        acc_energy_j: 0.0,
        cpu_workload_mb: cpu_mb,
        acc_workload_mb: acc_mb,
    };
    if cpu_pairs > 0 {
        m.cpu_time_s =
            cpu_pairs as f64 * c / p.cpu_cells_per_s * (1.0 + p.cpu_contention * k / r) * noise(0);
        m.cpu_energy_j = p.cpu_power_w * m.cpu_time_s;
    }
    if acc_pairs > 0 {
        let compute = acc_pairs as f64 * c / (p.cpu_cells_per_s * p.gpu_speedup)
            * (1.0 + p.gpu_contention * (r - k) / r)
            * noise(1);
        let transfer = r * c * 4.0 / p.bandwidth_bytes_s;
        m.acc_time_s = compute + transfer;
        m.acc_energy_j = p.gpu_compute_power_w * compute + p.gpu_transfer_power_w * transfer;
    }
    m
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    speed: f64,
    power_w: f64,
}

fn host_layout(p: &EmilPmParams, threads: i64, affinity: &str) -> Result<Layout, EvalError> {
    let t = positive_threads(threads)?;
    let (cores, sockets, factor) = match affinity {
        "compact" => {
            let cores = t.div_ceil(2).min(HOST_CORES);
            (cores, cores.div_ceil(HOST_CORES_PER_SOCKET), 1.0)
        }
        "scatter" => (t.min(HOST_CORES), HOST_SOCKETS, 1.0),
        "none" => (t.min(HOST_CORES), HOST_SOCKETS, p.cpu_unpinned_factor),
        other => return Err(EvalError::Setup(format!("unknown host affinity `{other}`"))),
    };
    let per_core = t as f64 / cores as f64;
    Ok(Layout {
        speed: cores as f64 * (1.0 + HOST_SMT_GAIN * (per_core - 1.0)) * factor,
        power_w: p.cpu_socket_power_w * sockets as f64
            + p.cpu_core_power_w * cores as f64
            + p.cpu_thread_power_w * t as f64,
    })
}

fn acc_layout(p: &EmilPmParams, threads: i64, affinity: &str) -> Result<Layout, EvalError> {
    let t = positive_threads(threads)?;
    let (cores, factor) = match affinity {
        "compact" => (t.div_ceil(4).min(ACC_CORES), 1.0),
        "balanced" => (t.min(ACC_CORES), 1.0),
        "scatter" => (t.min(ACC_CORES), p.acc_scatter_factor),
        other => return Err(EvalError::Setup(format!("unknown accelerator affinity `{other}`"))),
    };
    // in-order cores need several hardware threads to hide latency
    let per_core = (t as f64 / cores as f64).round() as u64;
    let occupancy = match per_core {
        0 | 1 => 0.5,
        2 => 0.85,
        3 => 0.95,
        _ => 1.0,
    };
    Ok(Layout {
        speed: cores as f64 * occupancy * factor,
        power_w: p.acc_base_power_w + p.acc_core_power_w * cores as f64 + p.acc_thread_power_w * t as f64,
    })
}

fn positive_threads(t: i64) -> Result<u64, EvalError> {
    if t <= 0 {
        return Err(EvalError::Setup(format!("thread count must be positive, got {t}")));
    }
    Ok(t as u64)
}

/// `keys` holds each unit's (threads, affinity); the rugged factor of a unit
/// depends only on its own settings.
fn emil_measure(
    p: &EmilPmParams,
    config: &Configuration,
    host: Layout,
    acc: Layout,
    cpu_w: i64,
    keys: [[i64; 2]; 2],
) -> RawMeasurement {
    let s = cpu_w.clamp(0, 100) as f64 / 100.0;
    let total = p.input_mb;
    let noise = |unit: usize| 1.0 + p.rugged_amplitude * rugged(p.seed, unit as u64, &keys[unit]);
    let mut m = RawMeasurement {
        config: config.clone(),
        workload_mb: total,
        cpu_time_s: 0.0,
        acc_time_s: 0.0,
        cpu_energy_j: 0.0,
        acc_energy_j: 0.0,
        cpu_workload_mb: total * s,
        acc_workload_mb: if cpu_w >= 100 { 0.0 } else { total * (1.0 - s) },
    };
    if m.cpu_workload_mb > 0.0 {
        m.cpu_time_s =
            m.cpu_workload_mb / (p.cpu_rate * host.speed) * (1.0 + p.cpu_contention * s) * noise(0);
        m.cpu_energy_j = host.power_w * m.cpu_time_s;
    }
    if m.acc_workload_mb > 0.0 {
        let compute =
            m.acc_workload_mb / (p.acc_rate * acc.speed) * (1.0 + p.acc_contention * (1.0 - s)) * noise(1);
        let transfer = m.acc_workload_mb / p.bandwidth_mb_s;
        m.acc_time_s = compute + transfer;
        m.acc_energy_j = acc.power_w * compute + p.transfer_power_w * transfer;
    }
    m
}

/// Deterministic value in [-1, 1] per (seed, unit, key).
fn rugged(seed: u64, unit: u64, key: &[i64]) -> f64 {
    let mut h = splitmix(seed ^ splitmix(unit.wrapping_add(0x51ED)));
    for &v in key {
        h = splitmix(h ^ v as u64);
    }
    // 53 random bits mapped onto [-1, 1]
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// An [`Oracle`] behind the evaluator interface.
#[derive(Debug)]
pub struct OracleEvaluator {
    oracle: Oracle,
    count: Counter,
}

impl OracleEvaluator {
    pub fn new(spec: OracleSpec, space: ParameterSpace) -> Result<Self, EvalError> {
        Ok(OracleEvaluator {
            oracle: Oracle::new(spec, space)?,
            count: Counter::default(),
        })
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }
}

impl Evaluator for OracleEvaluator {
    fn evaluate(&self, config: &Configuration) -> Result<f64, EvalError> {
        self.count.bump();
        Ok(energy_efficiency(&self.oracle.measure(config)?)?)
    }

    fn evaluation_count(&self) -> u64 {
        self.count.get()
    }

    fn describe(&self) -> String {
        format!("oracle {}", self.oracle.spec)
    }
}
