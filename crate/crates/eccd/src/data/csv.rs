//! Minimal numeric CSV reader: response in the first column, features after.

use super::Dataset;
use crate::error::{EccdError, Result};
use ndarray::{Array1, Array2};
use std::fs;
use std::path::Path;

/// Load a comma-separated numeric table. With `has_header` the first line is
/// skipped. Every row must have the same number of fields, all numeric.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, has_header)
}

pub(crate) fn parse_csv(text: &str, has_header: bool) -> Result<Dataset> {
    let mut y: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if has_header && lineno == 1 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(EccdError::parse(
                lineno,
                "need at least a response column and one feature column",
            ));
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(EccdError::parse(
                    lineno,
                    format!("row has {} fields, expected {w}", fields.len()),
                ))
            }
            _ => {}
        }
        let mut parsed = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f
                .parse()
                .map_err(|_| EccdError::parse(lineno, format!("non-numeric field `{f}`")))?;
            parsed.push(v);
        }
        y.push(parsed[0]);
        rows.push(parsed[1..].to_vec());
    }

    if rows.is_empty() {
        return Err(EccdError::parse(1, "file contains no data rows"));
    }
    let n = rows.len();
    let p = width.unwrap() - 1;
    let mut x = Array2::zeros((n, p));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Dataset::new(x, Array1::from(y))
}
