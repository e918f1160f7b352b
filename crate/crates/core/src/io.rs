//! Small text and file helpers shared by the artifact readers and writers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a headered numeric CSV. The header must match `columns` exactly.
pub fn read_csv_rows<R: BufRead>(r: R, columns: &[&str], context: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::parse(context, e))?,
        None => return Err(Error::parse(context, "empty input")),
    };
    let got: Vec<&str> = header.trim_end_matches('\r').split(',').map(str::trim).collect();
    if got != columns {
        return Err(Error::parse(
            context,
            format!("expected header {:?}, found {:?}", columns.join(","), header),
        ));
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::parse(context, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| Error::parse(context, format!("line {}: {e}", k + 2)))?;
        if row.len() != columns.len() {
            return Err(Error::parse(
                context,
                format!("line {}: expected {} fields, found {}", k + 2, columns.len(), row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Writes through `f` and flushes, attaching the path to any I/O error.
pub fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        writeln!(w)
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::parse(path.display().to_string(), e))
}
