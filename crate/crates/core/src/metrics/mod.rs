//! Performance and energy metrics of one hybrid CPU + accelerator run.
//!
//! Units are fixed by field names: megabytes (10^6 bytes), seconds, joules,
//! watts. Nothing is rescaled implicitly.
//!
//! * time = max(cpu_time, acc_time), the slowest unit
//! * throughput = workload / time; per unit: unit workload / unit time
//! * energy = cpu_energy + acc_energy
//! * power = cpu_energy / cpu_time + acc_energy / acc_time
//! * energy efficiency = throughput / power, in MB/J
//!
//! A unit that received no work is idle: it contributes 0 MB/s and 0 W
//! instead of a division by zero, so host-only and accelerator-only runs are
//! ordinary measurements. Total power is the sum of each unit's average power
//! over its own busy time.

pub mod log;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::Configuration;

const SPLIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("energy efficiency is undefined when total power is zero")]
    UndefinedEfficiency,
}

/// Observed times and energies of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMeasurement {
    pub config: Configuration,
    pub workload_mb: f64,
    pub cpu_time_s: f64,
    /// Includes host to device transfers.
    pub acc_time_s: f64,
    pub cpu_energy_j: f64,
    pub acc_energy_j: f64,
    pub cpu_workload_mb: f64,
    pub acc_workload_mb: f64,
}

impl RawMeasurement {
    pub fn validate(&self) -> Result<(), MetricsError> {
        let fields = [
            ("workload_mb", self.workload_mb),
            ("cpu_time_s", self.cpu_time_s),
            ("acc_time_s", self.acc_time_s),
            ("cpu_energy_j", self.cpu_energy_j),
            ("acc_energy_j", self.acc_energy_j),
            ("cpu_workload_mb", self.cpu_workload_mb),
            ("acc_workload_mb", self.acc_workload_mb),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        let split = self.cpu_workload_mb + self.acc_workload_mb;
        if (split - self.workload_mb).abs() > SPLIT_TOLERANCE * self.workload_mb.max(1.0) {
            return Err(invalid(format!(
                "unit workloads sum to {split} MB, expected {} MB",
                self.workload_mb
            )));
        }
        for (unit, work, time, energy) in [
            ("cpu", self.cpu_workload_mb, self.cpu_time_s, self.cpu_energy_j),
            ("acc", self.acc_workload_mb, self.acc_time_s, self.acc_energy_j),
        ] {
            if work == 0.0 && (time != 0.0 || energy != 0.0) {
                return Err(invalid(format!("idle {unit} reports nonzero time or energy")));
            }
        }
        Ok(())
    }
}

fn invalid(msg: String) -> MetricsError {
    MetricsError::InvalidMeasurement(msg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Power {
    pub cpu: f64,
    pub acc: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMetrics {
    pub time_s: f64,
    pub throughput_mb_s: f64,
    pub cpu_throughput_mb_s: f64,
    pub acc_throughput_mb_s: f64,
    pub energy_j: f64,
    pub cpu_power_w: f64,
    pub acc_power_w: f64,
    pub power_w: f64,
    pub energy_efficiency_mb_j: f64,
}

pub fn exec_time(m: &RawMeasurement) -> f64 {
    m.cpu_time_s.max(m.acc_time_s)
}

pub fn throughput(m: &RawMeasurement) -> Result<f64, MetricsError> {
    rate(m.workload_mb, exec_time(m), "total")
}

/// `(cpu, acc)` throughputs, each over the unit's own workload and time.
pub fn unit_throughputs(m: &RawMeasurement) -> Result<(f64, f64), MetricsError> {
    Ok((
        rate(m.cpu_workload_mb, m.cpu_time_s, "cpu")?,
        rate(m.acc_workload_mb, m.acc_time_s, "acc")?,
    ))
}

fn rate(work: f64, time: f64, what: &str) -> Result<f64, MetricsError> {
    if work == 0.0 {
        Ok(0.0)
    } else if time > 0.0 {
        Ok(work / time)
    } else {
        Err(invalid(format!("{what} processed {work} MB in zero time")))
    }
}

pub fn energy(m: &RawMeasurement) -> f64 {
    m.cpu_energy_j + m.acc_energy_j
}

pub fn power(m: &RawMeasurement) -> Result<Power, MetricsError> {
    let unit = |energy: f64, time: f64, what: &str| {
        if energy == 0.0 {
            Ok(0.0)
        } else if time > 0.0 {
            Ok(energy / time)
        } else {
            Err(invalid(format!("{what} consumed {energy} J in zero time")))
        }
    };
    let cpu = unit(m.cpu_energy_j, m.cpu_time_s, "cpu")?;
    let acc = unit(m.acc_energy_j, m.acc_time_s, "acc")?;
    Ok(Power {
        cpu,
        acc,
        total: cpu + acc,
    })
}

pub fn energy_efficiency(m: &RawMeasurement) -> Result<f64, MetricsError> {
    let p = power(m)?;
    if p.total <= 0.0 {
        return Err(MetricsError::UndefinedEfficiency);
    }
    Ok(throughput(m)? / p.total)
}

pub fn derive_all(m: &RawMeasurement) -> Result<DerivedMetrics, MetricsError> {
    m.validate()?;
    let (cpu_thr, acc_thr) = unit_throughputs(m)?;
    let p = power(m)?;
    Ok(DerivedMetrics {
        time_s: exec_time(m),
        throughput_mb_s: throughput(m)?,
        cpu_throughput_mb_s: cpu_thr,
        acc_throughput_mb_s: acc_thr,
        energy_j: energy(m),
        cpu_power_w: p.cpu,
        acc_power_w: p.acc,
        power_w: p.total,
        energy_efficiency_mb_j: energy_efficiency(m)?,
    })
}
