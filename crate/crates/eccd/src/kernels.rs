//! Shared computational kernels for the coordinate-descent engines.
//!
//! The solvers keep the design matrix transposed (one column of X per
//! contiguous row) so that the column dot products below run on unit-stride
//! slices. Per-block curvature is built as explicit column dot products
//! rather than a general matrix product; blocks are small enough that the
//! dots win on locality and keep the dependency footprint flat.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Soft-thresholding operator: shrink `z` toward zero by `gamma`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Gradient and curvature of one coordinate block, frozen at block entry.
///
/// For block coordinates j_1..j_s: `a[l] = x_{j_l}' mean` and
/// `b[l][q] = sum_i weight_i x_{i,j_l} x_{i,j_q}`.
#[derive(Debug, Clone)]
pub struct BlockQuantities {
    pub indices: Vec<usize>,
    pub a: Array1<f64>,
    pub b: Array2<f64>,
}

/// Build the block quantities from the transposed design (`xt` is p x n,
/// row j holding column j of X), the current mean vector F'(eta), and the
/// current weight vector F''(eta).
pub fn compute_block(
    xt: ArrayView2<f64>,
    mean: &[f64],
    weight: &[f64],
    indices: &[usize],
) -> BlockQuantities {
    let s = indices.len();
    let mut a = vec![0.0; s];
    let mut b = vec![0.0; s * s];
    compute_block_into(xt, mean, weight, indices, &mut a, &mut b);
    BlockQuantities {
        indices: indices.to_vec(),
        a: Array1::from(a),
        b: Array2::from_shape_vec((s, s), b).expect("square block"),
    }
}

/// Slice-based core of `compute_block`; `b` is row-major s x s. The solver
/// calls this directly with scratch buffers it allocates once per fit.
pub fn compute_block_into(
    xt: ArrayView2<f64>,
    mean: &[f64],
    weight: &[f64],
    indices: &[usize],
    a: &mut [f64],
    b: &mut [f64],
) {
    let s = indices.len();
    let n = xt.ncols();
    debug_assert_eq!(mean.len(), n);
    debug_assert_eq!(weight.len(), n);
    debug_assert!(a.len() >= s && b.len() >= s * s);

    for (l, &jl) in indices.iter().enumerate() {
        let col_l = xt.row(jl);
        let col_l = col_l.as_slice().expect("transposed design rows are contiguous");
        let mut dot_m = 0.0;
        for i in 0..n {
            dot_m += col_l[i] * mean[i];
        }
        a[l] = dot_m;
        for (q, &jq) in indices.iter().enumerate().take(l + 1) {
            let col_q = xt.row(jq);
            let col_q = col_q.as_slice().expect("transposed design rows are contiguous");
            let mut acc = 0.0;
            for i in 0..n {
                acc += weight[i] * col_l[i] * col_q[i];
            }
            b[l * s + q] = acc;
            b[q * s + l] = acc;
        }
    }
}

/// sum_i weight_i * x_ij^2 for one column.
pub fn weighted_column_sq_norm(xt: ArrayView2<f64>, j: usize, weight: &[f64]) -> f64 {
    let col = xt.row(j);
    let col = col.as_slice().expect("transposed design rows are contiguous");
    let mut acc = 0.0;
    for i in 0..col.len() {
        acc += weight[i] * col[i] * col[i];
    }
    acc
}

/// Apply `z += sum_l delta[l] * x_{j_l}` in place. A block whose deltas are
/// all zero leaves `z` untouched (bitwise).
pub fn update_linear_predictor(
    z: &mut Array1<f64>,
    xt: ArrayView2<f64>,
    indices: &[usize],
    delta: &[f64],
) {
    debug_assert_eq!(indices.len(), delta.len());
    if delta.iter().all(|&d| d == 0.0) {
        return;
    }
    let zs = z.as_slice_mut().expect("linear predictor is contiguous");
    for (l, &j) in indices.iter().enumerate() {
        let d = delta[l];
        if d == 0.0 {
            continue;
        }
        let col = xt.row(j);
        let col = col.as_slice().expect("transposed design rows are contiguous");
        for i in 0..zs.len() {
            zs[i] += d * col[i];
        }
    }
}

/// Dot product of column `j` with an arbitrary vector.
pub fn column_dot(xt: ArrayView2<f64>, j: usize, v: ArrayView1<f64>) -> f64 {
    let col = xt.row(j);
    let col = col.as_slice().expect("transposed design rows are contiguous");
    let vs = v.as_slice().expect("vector is contiguous");
    let mut acc = 0.0;
    for i in 0..col.len() {
        acc += col[i] * vs[i];
    }
    acc
}

/// Mutable optimizer state threaded through epochs.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub beta: Array1<f64>,
    pub beta0: f64,
    /// Cached X beta, maintained incrementally.
    pub z: Array1<f64>,
    /// Active coordinates in insertion order.
    pub active: Vec<usize>,
    pub epoch: usize,
    /// Whether the cached mean/weight vectors reflect the current eta.
    pub grad_fresh: bool,
}

impl SolverState {
    pub fn new(n: usize, p: usize) -> Self {
        SolverState {
            beta: Array1::zeros(p),
            beta0: 0.0,
            z: Array1::zeros(n),
            active: Vec::new(),
            epoch: 0,
            grad_fresh: false,
        }
    }
}
