//! CSV input/output: RFC-4180, '.' decimal, UTF-8, LF line endings, floats
//! at 17 significant digits for bit-stable round trips.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::window::Window;

/// Formats a float with 17 significant digits (round-trip exact for f64).
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn needs_quoting(s: &str) -> bool {
    s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r')
}

fn write_field(out: &mut impl Write, field: &str) -> Result<()> {
    if needs_quoting(field) {
        out.write_all(b"\"")?;
        out.write_all(field.replace('"', "\"\"").as_bytes())?;
        out.write_all(b"\"")?;
    } else {
        out.write_all(field.as_bytes())?;
    }
    Ok(())
}

/// Writes a header line and rows of preformatted fields, LF-terminated.
pub fn write_rows(
    out: &mut impl Write,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for (i, h) in header.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        write_field(out, h)?;
    }
    out.write_all(b"\n")?;
    for row in rows {
        for (i, field) in row.iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            write_field(out, field)?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a numeric CSV (single- or d-column, optional one-line header) into
/// a Window with d = column count. Ragged rows or non-numeric cells are
/// reported with their line number.
pub fn ingest_csv(path: &Path) -> Result<Window> {
    let text = std::fs::read_to_string(path)?;
    ingest_csv_str(&text)
}

pub fn ingest_csv_str(text: &str) -> Result<Window> {
    let mut values: Vec<f64> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut data_rows = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                match dim {
                    None => dim = Some(row.len()),
                    Some(d) if d != row.len() => {
                        return Err(Error::CsvParse {
                            line: line_no,
                            reason: format!("expected {d} columns, found {}", row.len()),
                        });
                    }
                    _ => {}
                }
                values.extend(row);
                data_rows += 1;
            }
            Err(e) => {
                // a non-numeric first row is treated as a header
                if data_rows == 0 && dim.is_none() {
                    continue;
                }
                return Err(Error::CsvParse { line: line_no, reason: e.to_string() });
            }
        }
    }
    let dim = dim.ok_or(Error::CsvParse { line: 1, reason: "no numeric rows".into() })?;
    Window::new(values, dim)
}
