//! Deterministic CSV and JSON writers.

use serde::Serialize;
use std::path::{Path, PathBuf};

use super::CliError;

/// Seventeen significant digits, so values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn write_csv(dir: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(header).map_err(|e| io_err(&path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// Numeric rows as `{"header": value, ...}` objects for JSON output.
pub fn rows_as_json(header: &[&str], rows: &[Vec<f64>]) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let obj: serde_json::Map<String, serde_json::Value> = header
                .iter()
                .zip(r.iter())
                .map(|(h, v)| (h.to_string(), serde_json::json!(v)))
                .collect();
            serde_json::Value::Object(obj)
        })
        .collect();
    serde_json::Value::Array(rows)
}

/// Writes `rows` as `<stem>.csv` or `<stem>.json` depending on `format`.
pub fn write_table(
    dir: &Path,
    stem: &str,
    format: super::Format,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf, CliError> {
    match format {
        super::Format::Csv => {
            let text: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&x| fmt_f64(x)).collect()).collect();
            write_csv(dir, &format!("{stem}.csv"), header, &text)
        }
        super::Format::Json => write_json(dir, &format!("{stem}.json"), &rows_as_json(header, rows)),
    }
}
