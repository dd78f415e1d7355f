//! Matrix CSV files, JSON results and atomic writes.
//!
//! Matrix files are plain CSV with rows = samples and columns = features.
//! An optional single header row is recognised by containing a field that
//! does not parse as a number. Values are written with Rust's shortest
//! round-trip float formatting, so write-then-read is exact.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::RawMatrix;

fn parse_error(path: &Path, row: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        row,
        col,
        msg: msg.into(),
    }
}

/// Reads a numeric CSV matrix. Reported rows and columns are 1-based
/// positions in the file (the header, when present, is row 1).
pub fn read_matrix(path: &Path) -> Result<RawMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_error(path, 0, 0, format!("{other:?}")),
        })?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            parse_error(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<std::result::Result<f64, usize>> = record
            .iter()
            .enumerate()
            .map(|(j, f)| f.parse::<f64>().map_err(|_| j + 1))
            .collect();
        if i == 0 && parsed.iter().any(|p| p.is_err()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_error(
                    path,
                    line,
                    record.len().min(c) + 1,
                    format!("expected {c} fields, found {}", record.len()),
                ))
            }
            Some(_) => {}
        }
        for (j, p) in parsed.into_iter().enumerate() {
            match p {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => return Err(parse_error(path, line, j + 1, "non-finite value")),
                Err(col) => {
                    return Err(parse_error(
                        path,
                        line,
                        col,
                        format!("`{}` is not a number", &record[col - 1]),
                    ))
                }
            }
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_error(path, 0, 0, "no numeric rows"))?;
    RawMatrix::from_rows(rows, cols, values)
}

/// Writes `m` as header-less CSV, atomically.
pub fn write_matrix(path: &Path, m: &RawMatrix) -> Result<()> {
    let mut out = String::new();
    for row in m.view().rows() {
        let fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Writes `rows` (first row = header) as CSV, atomically.
pub fn write_table(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .write_record(row)
            .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    write_atomic(path, &bytes)
}

/// Writes to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line(), e.column(), e.to_string()))
}
