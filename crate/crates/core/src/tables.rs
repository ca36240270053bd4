//! Two-column calibration tables in CSV form, and CSV emission.
//!
//! Input files carry a header row naming both columns; blank lines and lines
//! starting with `#` are skipped. Errors point at the 1-based source line.

use std::io::Write;
use std::path::Path;

use crate::aom::{FrequencyResponseTable, VoltageCalibrationTable};
use crate::attack::GainTable;
use crate::error::{Error, Result};

pub const VOLTAGE_COLUMNS: [&str; 2] = ["voltage_v", "attenuation_db"];
pub const FREQUENCY_COLUMNS: [&str; 2] = ["frequency_mhz", "attenuation_db"];
pub const GAIN_COLUMNS: [&str; 2] = ["f_delta_mhz", "gain_fraction"];

/// Reads `(x, y)` rows under the expected header.
pub fn parse_pairs(text: &str, columns: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(&e))?.clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != columns {
        return Err(Error::Csv {
            line: headers.position().map_or(1, |p| p.line()),
            message: format!("expected header `{}`, found `{}`", columns.join(","), got.join(",")),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Csv { line, message: format!("expected 2 fields, found {}", record.len()) });
        }
        let field = |i: usize| -> Result<f64> {
            let raw = &record[i];
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::Csv { line, message: format!("{}: `{raw}` is not a number", columns[i]) })?;
            if !v.is_finite() {
                return Err(Error::Csv { line, message: format!("{}: `{raw}` is not finite", columns[i]) });
            }
            Ok(v)
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => e.to_string(),
    };
    Error::Csv { line, message }
}

/// Attaches the source line to table-level errors, which know only knot indices.
fn with_source(e: Error, what: &str) -> Error {
    match e {
        Error::Table(m) => Error::Table(format!("{what}: {m}")),
        other => other,
    }
}

pub fn parse_voltage_table(text: &str, reference_frequency_mhz: f64) -> Result<VoltageCalibrationTable> {
    let pairs = parse_pairs(text, VOLTAGE_COLUMNS)?;
    VoltageCalibrationTable::new(reference_frequency_mhz, &pairs).map_err(|e| with_source(e, "voltage table"))
}

pub fn parse_frequency_table(text: &str) -> Result<FrequencyResponseTable> {
    let pairs = parse_pairs(text, FREQUENCY_COLUMNS)?;
    FrequencyResponseTable::new(&pairs).map_err(|e| with_source(e, "frequency table"))
}

pub fn parse_gain_table(text: &str) -> Result<GainTable> {
    let pairs = parse_pairs(text, GAIN_COLUMNS)?;
    GainTable::new(&pairs).map_err(|e| with_source(e, "gain table"))
}

pub fn read_pairs_file(path: &Path, columns: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_pairs(&text, columns).map_err(|e| match e {
        Error::Csv { line, message } => Error::Csv { line, message: format!("{}: {message}", path.display()) },
        other => other,
    })
}

/// In-memory CSV table: one header row and rows of already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    /// File stem, without extension.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_f64(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.header).map_err(|e| Error::Io(e.to_string()))?;
        for row in &self.rows {
            wtr.write_record(row).map_err(|e| Error::Io(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }
}

/// Shortest representation that round-trips; exponent form for very small
/// or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v != 0.0 && v.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
