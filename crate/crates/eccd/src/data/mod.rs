//! Dense datasets, file readers, and the synthetic problem generator.
//!
//! Everything downstream assumes the design matrix is standardized so that
//! every column has mean zero and squared norm n (not unit variance). That
//! convention makes the coordinate-descent curvature terms O(1) per column
//! and is applied once here rather than inside the solvers.

mod csv;
mod libsvm;
mod synthetic;

pub use csv::load_csv;
pub use libsvm::{load_libsvm, write_libsvm};
pub use synthetic::{generate_synthetic, SyntheticConfig};

use crate::error::{EccdError, Result};
use ndarray::{Array1, Array2};

/// A dense regression problem: an n x p design matrix and a response vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    /// Column means subtracted during standardization (zeros before).
    pub col_means: Array1<f64>,
    /// Column scales divided out during standardization (ones before); a
    /// scale of exactly 0 marks a degenerate constant column.
    pub col_scales: Array1<f64>,
    pub standardized: bool,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(EccdError::Dimension(format!(
                "design matrix has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        let p = x.ncols();
        Ok(Dataset {
            x,
            y,
            col_means: Array1::zeros(p),
            col_scales: Array1::ones(p),
            standardized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Columns that were constant before standardization. Their coefficients
    /// stay frozen at zero for the whole fit.
    pub fn degenerate_columns(&self) -> Vec<usize> {
        self.col_scales
            .iter()
            .enumerate()
            .filter_map(|(j, &s)| if self.standardized && s == 0.0 { Some(j) } else { None })
            .collect()
    }

    /// Center every column to mean zero and rescale it to squared norm n.
    ///
    /// Constant columns cannot be rescaled; they are zeroed out and flagged
    /// by a recorded scale of 0. Standardizing an already standardized
    /// dataset is a no-op.
    pub fn standardize(mut self) -> Result<Self> {
        if self.standardized {
            return Ok(self);
        }
        let n = self.n();
        if n < 2 {
            return Err(EccdError::Dimension(format!(
                "standardization needs at least 2 rows, got {n}"
            )));
        }
        let nf = n as f64;
        for j in 0..self.p() {
            let mut col = self.x.column_mut(j);
            let mean = col.sum() / nf;
            col.mapv_inplace(|v| v - mean);
            let scale = (col.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
            if scale == 0.0 {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|v| v / scale);
            }
            self.col_means[j] = mean;
            self.col_scales[j] = scale;
        }
        self.standardized = true;
        Ok(self)
    }
}

/// Map an arbitrary two-level response onto {0, 1} by sorted order.
///
/// Responses already coded 0/1 pass through untouched; more than two
/// distinct values cannot be a binary outcome and is rejected.
pub fn coerce_binary_labels(y: &mut Array1<f64>) -> Result<()> {
    let mut levels: Vec<f64> = Vec::new();
    for &v in y.iter() {
        if !v.is_finite() {
            return Err(EccdError::Domain(format!("non-finite response value {v}")));
        }
        if !levels.contains(&v) {
            levels.push(v);
            if levels.len() > 2 {
                return Err(EccdError::Config(format!(
                    "binomial family needs a two-level response, found at least 3 levels \
                     including {:?}",
                    levels
                )));
            }
        }
    }
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let already_binary = levels.iter().all(|&v| v == 0.0 || v == 1.0);
    if already_binary {
        return Ok(());
    }
    match levels.as_slice() {
        [_single] => Err(EccdError::Config(
            "binomial family needs a two-level response, found a constant one".into(),
        )),
        [lo, _hi] => {
            let lo = *lo;
            y.mapv_inplace(|v| if v == lo { 0.0 } else { 1.0 });
            Ok(())
        }
        _ => unreachable!("levels capped at two above"),
    }
}
