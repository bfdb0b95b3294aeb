//! Reader and writer for the plain-text LIBSVM sparse format.
//!
//! Each row is `label index:value ...` with 1-based, strictly ascending
//! indices. Rows materialize into a dense matrix; absent indices are zeros.

use super::Dataset;
use crate::error::{EccdError, Result};
use ndarray::{Array1, Array2};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Parse a LIBSVM file into a dense dataset.
///
/// The feature count is the largest index seen, or `p_hint` if that is
/// larger (useful when trailing columns are all zero). The conventional
/// binary label codings {-1, +1} and {1, 2} are mapped onto {0, 1}; any
/// other labels are kept verbatim.
pub fn load_libsvm(path: impl AsRef<Path>, p_hint: Option<usize>) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_libsvm(&text, p_hint)
}

pub(crate) fn parse_libsvm(text: &str, p_hint: Option<usize>) -> Result<Dataset> {
    let mut labels: Vec<f64> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut p = p_hint.unwrap_or(0);

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut tokens = line.split_whitespace();
        let Some(label_tok) = tokens.next() else { continue };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| EccdError::parse(lineno, format!("bad label `{label_tok}`")))?;

        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut last_idx = 0usize;
        for tok in tokens {
            let (idx_s, val_s) = tok
                .split_once(':')
                .ok_or_else(|| EccdError::parse(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx_s
                .parse()
                .map_err(|_| EccdError::parse(lineno, format!("bad feature index `{idx_s}`")))?;
            if idx == 0 {
                return Err(EccdError::parse(lineno, "feature indices are 1-based"));
            }
            if idx <= last_idx {
                return Err(EccdError::parse(
                    lineno,
                    format!("feature indices must be strictly ascending, {idx} after {last_idx}"),
                ));
            }
            let val: f64 = val_s
                .parse()
                .map_err(|_| EccdError::parse(lineno, format!("bad feature value `{val_s}`")))?;
            last_idx = idx;
            row.push((idx, val));
        }
        p = p.max(last_idx);
        labels.push(label);
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(EccdError::parse(1, "file contains no data rows"));
    }

    let n = rows.len();
    let mut x = Array2::zeros((n, p));
    for (i, row) in rows.iter().enumerate() {
        for &(idx, val) in row {
            x[(i, idx - 1)] = val;
        }
    }
    let mut y = Array1::from(labels);
    map_conventional_binary_labels(&mut y);
    Dataset::new(x, y)
}

/// Rewrites {-1, +1} or {1, 2} labels as {0, 1}; leaves anything else alone.
fn map_conventional_binary_labels(y: &mut Array1<f64>) {
    let mut seen: Vec<f64> = Vec::new();
    for &v in y.iter() {
        if !seen.contains(&v) {
            seen.push(v);
            if seen.len() > 2 {
                return;
            }
        }
    }
    seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    match seen.as_slice() {
        [-1.0, 1.0] => y.mapv_inplace(|v| if v == -1.0 { 0.0 } else { 1.0 }),
        [1.0, 2.0] => y.mapv_inplace(|v| if v == 1.0 { 0.0 } else { 1.0 }),
        _ => {}
    }
}

/// Write a dataset in LIBSVM format; zero entries are omitted.
///
/// Values print in shortest round-trip form, so `load_libsvm` recovers the
/// matrix bit for bit (given a `p_hint` covering trailing zero columns).
pub fn write_libsvm(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for i in 0..d.n() {
        let _ = write!(out, "{}", d.y[i]);
        for j in 0..d.p() {
            let v = d.x[(i, j)];
            if v != 0.0 {
                let _ = write!(out, " {}:{}", j + 1, v);
            }
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
