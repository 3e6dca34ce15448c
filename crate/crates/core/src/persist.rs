//! Small helpers shared by every artifact writer: 17-significant-digit float
//! formatting, header-checked CSV reading and JSON files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::{Error, Result};

/// Formats `v` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = read_file(path)?;
    serde_json::from_str(&s).map_err(|e| Error::Artifact {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Reads a numeric CSV, checking the header exactly.
pub fn read_csv(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    parse_csv(&read_file(path)?, header).map_err(|msg| Error::Artifact {
        path: path.to_path_buf(),
        msg,
    })
}

pub fn parse_csv(text: &str, header: &[&str]) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut lines = text.lines();
    let first = lines.next().ok_or("empty file")?;
    let found: Vec<&str> = first.split(',').map(str::trim).collect();
    if found != header {
        return Err(format!("expected header {:?}, found {:?}", header.join(","), first));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let row = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| format!("line {}: {e}", i + 2))?;
            if row.len() != header.len() {
                return Err(format!(
                    "line {}: expected {} fields, found {}",
                    i + 2,
                    header.len(),
                    row.len()
                ));
            }
            Ok(row)
        })
        .collect()
}
