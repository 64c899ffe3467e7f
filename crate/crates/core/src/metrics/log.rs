//! Measurement log: comma-separated, one experiment per row.
//!
//! The header is mandatory and must read: the space's parameter names in
//! space order, then `workload_mb, cpu_time_s, acc_time_s, cpu_energy_j,
//! acc_energy_j, cpu_workload_mb, acc_workload_mb`. Categorical parameters
//! are written as labels; integer codes are accepted on input.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use super::RawMeasurement;
use crate::space::{Configuration, ParameterSpace};

pub const METRIC_COLUMNS: [&str; 7] = [
    "workload_mb",
    "cpu_time_s",
    "acc_time_s",
    "cpu_energy_j",
    "acc_energy_j",
    "cpu_workload_mb",
    "acc_workload_mb",
];

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error on measurement log: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Format { line: u64, message: String },
}

impl LogError {
    fn at(line: u64, message: impl Into<String>) -> Self {
        LogError::Format {
            line,
            message: message.into(),
        }
    }
}

/// Expected header for a space.
pub fn header(space: &ParameterSpace) -> Vec<String> {
    space
        .parameter_names()
        .into_iter()
        .map(str::to_string)
        .chain(METRIC_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

/// One log row as text fields (no trailing newline).
pub fn format_row(space: &ParameterSpace, m: &RawMeasurement) -> Vec<String> {
    let mut fields: Vec<String> = space
        .parameters()
        .iter()
        .zip(m.config.values())
        .map(|(p, &v)| p.format_value(v))
        .collect();
    for v in [
        m.workload_mb,
        m.cpu_time_s,
        m.acc_time_s,
        m.cpu_energy_j,
        m.acc_energy_j,
        m.cpu_workload_mb,
        m.acc_workload_mb,
    ] {
        // Display for f64 is the shortest text that parses back exactly
        fields.push(v.to_string());
    }
    fields
}

/// Parses one row's fields. `line` is only used for error messages.
pub fn parse_fields<'a, I>(space: &ParameterSpace, fields: I, line: u64) -> Result<RawMeasurement, LogError>
where
    I: IntoIterator<Item = &'a str>,
{
    let fields: Vec<&str> = fields.into_iter().collect();
    let expected = space.len() + METRIC_COLUMNS.len();
    if fields.len() != expected {
        return Err(LogError::at(
            line,
            format!("expected {expected} columns, found {}", fields.len()),
        ));
    }
    let mut values = Vec::with_capacity(space.len());
    for (p, text) in space.parameters().iter().zip(&fields) {
        values.push(p.parse_value(text).map_err(|e| LogError::at(line, e.to_string()))?);
    }
    let config = Configuration::from_values(values);
    space.validate(&config).map_err(|v| {
        let msg = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
        LogError::at(line, msg)
    })?;
    let mut nums = [0.0f64; 7];
    for (k, (slot, text)) in nums.iter_mut().zip(&fields[space.len()..]).enumerate() {
        *slot = text
            .trim()
            .parse::<f64>()
            .map_err(|_| LogError::at(line, format!("{}: `{text}` is not a number", METRIC_COLUMNS[k])))?;
    }
    let m = RawMeasurement {
        config,
        workload_mb: nums[0],
        cpu_time_s: nums[1],
        acc_time_s: nums[2],
        cpu_energy_j: nums[3],
        acc_energy_j: nums[4],
        cpu_workload_mb: nums[5],
        acc_workload_mb: nums[6],
    };
    m.validate().map_err(|e| LogError::at(line, e.to_string()))?;
    Ok(m)
}

pub fn read_log<R: Read>(space: &ParameterSpace, reader: R) -> Result<Vec<RawMeasurement>, LogError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let head = match records.next() {
        Some(r) => r.map_err(|e| csv_err(&e))?,
        None => return Err(LogError::at(1, "missing header row")),
    };
    let expected = header(space);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(LogError::at(
            1,
            format!("header must be `{}`", expected.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_err(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push(parse_fields(space, record.iter(), line)?);
    }
    Ok(rows)
}

fn csv_err(e: &csv::Error) -> LogError {
    let line = e.position().map_or(0, |p| p.line());
    LogError::at(line, e.to_string())
}

pub fn load_log(space: &ParameterSpace, path: impl AsRef<Path>) -> Result<Vec<RawMeasurement>, LogError> {
    let file = std::fs::File::open(path)?;
    read_log(space, std::io::BufReader::new(file))
}

pub fn write_log<W: Write>(
    space: &ParameterSpace,
    rows: &[RawMeasurement],
    writer: W,
) -> Result<(), LogError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| LogError::Io(std::io::Error::other(e));
    wtr.write_record(header(space)).map_err(io)?;
    for m in rows {
        wtr.write_record(format_row(space, m)).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_log(
    space: &ParameterSpace,
    rows: &[RawMeasurement],
    path: impl AsRef<Path>,
) -> Result<(), LogError> {
    let file = std::fs::File::create(path)?;
    write_log(space, rows, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::energy_efficiency;

    fn row(space: &ParameterSpace) -> RawMeasurement {
        RawMeasurement {
            config: space.parse_assignment("CPU-W=60").unwrap(),
            workload_mb: 100.0,
            cpu_time_s: 3.0,
            acc_time_s: 2.0,
            cpu_energy_j: 150.0,
            acc_energy_j: 0.1 + 0.2,
            cpu_workload_mb: 60.0,
            acc_workload_mb: 40.0,
        }
    }

    #[test]
    fn write_then_read() {
        let ida = ParameterSpace::ida();
        let m = row(&ida);
        let mut buf = Vec::new();
        write_log(&ida, std::slice::from_ref(&m), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("CPU-W,GPU-W,workload_mb,cpu_time_s,"));
        let back = read_log(&ida, buf.as_slice()).unwrap();
        assert_eq!(back, vec![m.clone()]);
        assert_eq!(energy_efficiency(&back[0]).unwrap(), energy_efficiency(&m).unwrap());
    }

    #[test]
    fn labels_and_codes_both_parse() {
        let emil = ParameterSpace::emil();
        let head = header(&emil).join(",");
        let text = format!(
            "{head}\n12,60,scatter,compact,100,0,10,1,0,5,0,10,0\n12,60,1,2,99,1,10,1,1,5,5,9.9,0.1\n"
        );
        let rows = read_log(&emil, text.as_bytes()).unwrap();
        assert_eq!(rows[0].config.values()[2..4], [1, 2]);
        assert_eq!(rows[1].config.values()[2..4], [1, 2]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let ida = ParameterSpace::ida();
        let head = header(&ida).join(",");
        let bad = format!("{head}\n60,40,100,3,2,150,1,60,40\n60,40,100,x,2,150,1,60,40\n");
        match read_log(&ida, bad.as_bytes()) {
            Err(LogError::Format { line: 3, message }) => assert!(message.contains("cpu_time_s")),
            other => panic!("unexpected {other:?}"),
        }
        let wrong_header = "CPU-W,workload_mb\n";
        assert!(matches!(
            read_log(&ida, wrong_header.as_bytes()),
            Err(LogError::Format { line: 1, .. })
        ));
        let violation = format!("{head}\n60,50,100,3,2,150,1,60,40\n");
        assert!(matches!(
            read_log(&ida, violation.as_bytes()),
            Err(LogError::Format { line: 2, .. })
        ));
        assert!(matches!(read_log(&ida, "".as_bytes()), Err(LogError::Format { line: 1, .. })));
    }
}
