//! Atomic file writes and CSV output.
//!
//! Floats are written in Rust's shortest round-trip form, so every CSV
//! value parses back to the identical `f64`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let ctx = || format!("writing {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(ctx(), e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(ctx(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(ctx(), e))?;
    tmp.persist(path).map_err(|e| Error::io(ctx(), e.error))?;
    Ok(())
}

/// One CSV value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    F(f64),
    I(u64),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::I(v)
    }
}

/// CSV text with a header line.
pub fn csv_string(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            match c {
                Cell::F(v) => s.push_str(&format!("{v:?}")),
                Cell::I(v) => s.push_str(&v.to_string()),
            }
        }
        s.push('\n');
    }
    s
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    write_atomic(path, csv_string(header, rows).as_bytes())
}

/// Parses a numeric CSV with the expected header; returns the rows.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut lines = text.lines();
    let got = lines.next().unwrap_or("");
    if got != header.join(",") {
        return Err(Error::invalid(path.display().to_string(), format!("unexpected CSV header `{got}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let row = l
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::invalid(path.display().to_string(), format!("line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(Error::invalid(path.display().to_string(), format!("line {}: {} columns", i + 2, row.len())));
            }
            Ok(row)
        })
        .collect()
}
