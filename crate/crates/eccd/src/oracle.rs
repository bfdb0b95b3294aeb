//! Independent reference solvers for cross-checking the coordinate engines.
//!
//! Nothing here touches the kernels, solvers, or path modules: the objective,
//! its gradient, and the intercept update are reimplemented from the family
//! definitions alone, so a bug shared with the production code path would
//! have to live in the family formulas themselves (which are in turn pinned
//! by finite-difference tests). These solvers are deliberately simple and
//! slow: proximal gradient descent with a power-iteration step size, and an
//! exhaustive zooming grid search for one- and two-coefficient problems.

use crate::data::Dataset;
use crate::error::{EccdError, Result};
use crate::families::FamilySpec;
use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Settings for the proximal-gradient reference solver.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Explicit step size; estimated as 1/L by power iteration when absent.
    pub step_size: Option<f64>,
    pub max_iters: usize,
    /// Stop once the per-iteration objective decrease falls below this.
    pub tol: f64,
    pub fit_intercept: bool,
    /// Record the objective after every iteration in `OracleFit::trace`.
    pub trace: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            step_size: None,
            max_iters: 200_000,
            tol: 1e-10,
            fit_intercept: true,
            trace: false,
        }
    }
}

/// Reference solution.
#[derive(Debug, Clone)]
pub struct OracleFit {
    pub beta: Array1<f64>,
    pub beta0: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
}

fn soft(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Penalized objective evaluated from first principles; infinite outside the
/// family domain so line searches treat domain violations as ascent.
fn oracle_objective(
    d: &Dataset,
    family: &FamilySpec,
    beta: ArrayView1<f64>,
    beta0: f64,
    lambda: f64,
    alpha: f64,
) -> f64 {
    let n = d.n();
    let mut ll = 0.0;
    for i in 0..n {
        let mut eta = beta0;
        for j in 0..d.p() {
            eta += d.x[(i, j)] * beta[j];
        }
        match family.cgf(eta) {
            Ok(f) => ll += d.y[i] * eta - f,
            Err(_) => return f64::INFINITY,
        }
    }
    ll /= family.dispersion;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for &b in beta.iter() {
        l1 += b.abs();
        l2 += b * b;
    }
    let obj = -ll / n as f64 + lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
    if obj.is_nan() {
        f64::INFINITY
    } else {
        obj
    }
}

fn mean_weight(
    d: &Dataset,
    family: &FamilySpec,
    beta: &Array1<f64>,
    beta0: f64,
    mean: &mut [f64],
    weight: &mut [f64],
) -> Result<()> {
    for i in 0..d.n() {
        let mut eta = beta0;
        for j in 0..d.p() {
            eta += d.x[(i, j)] * beta[j];
        }
        mean[i] = family.mean(eta)?;
        weight[i] = family.variance_weight(eta)?;
    }
    Ok(())
}

/// One exact Newton step for the intercept at fixed coefficients.
fn newton_intercept(d: &Dataset, mean: &[f64], weight: &[f64]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..d.n() {
        num += d.y[i] - mean[i];
        den += weight[i];
    }
    if !(den > 1e-12) {
        return Err(EccdError::Saturation(
            "oracle intercept update lost all curvature".into(),
        ));
    }
    Ok(num / den)
}

/// Largest eigenvalue of `X' diag(w) X / (n d) + ridge I`, by power
/// iteration from a fixed random start.
fn lipschitz_estimate(d: &Dataset, weight: &[f64], ridge: f64, dispersion: f64) -> f64 {
    let n = d.n();
    let p = d.p();
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let mut v: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    v.iter_mut().for_each(|x| *x /= norm);
    let mut eig = 0.0;
    let mut xv = vec![0.0; n];
    for _ in 0..50 {
        for (i, slot) in xv.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..p {
                acc += d.x[(i, j)] * v[j];
            }
            *slot = acc * weight[i];
        }
        let mut hv = vec![0.0; p];
        for (j, slot) in hv.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                acc += d.x[(i, j)] * xv[i];
            }
            *slot = acc / (n as f64 * dispersion) + ridge * v[j];
        }
        eig = hv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if eig <= 1e-300 {
            break;
        }
        for j in 0..p {
            v[j] = hv[j] / eig;
        }
    }
    eig.max(1e-12)
}

/// Proximal gradient descent on the penalized objective. Each iteration takes
/// one soft-thresholded gradient step on the coefficients and one Newton step
/// on the intercept; if the objective rises (possible for families whose
/// curvature grows away from the start, where the initial step size is too
/// optimistic) the iterate is rolled back and the step halved, so the
/// recorded objective sequence is non-increasing.
pub fn prox_grad_solve(
    d: &Dataset,
    family: &FamilySpec,
    lambda: f64,
    alpha: f64,
    cfg: &OracleConfig,
) -> Result<OracleFit> {
    if !d.standardized {
        return Err(EccdError::Config("the oracle requires a standardized dataset".into()));
    }
    if !(lambda >= 0.0) || !(0.0..=1.0).contains(&alpha) {
        return Err(EccdError::Config(format!(
            "invalid penalty lambda={lambda}, alpha={alpha}"
        )));
    }
    let n = d.n();
    let p = d.p();
    let ridge = lambda * (1.0 - alpha);
    let ybar = d.y.sum() / n as f64;

    let mut beta = Array1::zeros(p);
    let mut beta0 = if cfg.fit_intercept { family.eta_for_mean(ybar)? } else { 0.0 };
    let mut mean = vec![0.0; n];
    let mut weight = vec![0.0; n];
    mean_weight(d, family, &beta, beta0, &mut mean, &mut weight)?;

    let mut eta_step = match cfg.step_size {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(EccdError::Config(format!("step size must be positive, got {s}")));
        }
        None => 1.0 / (1.1 * lipschitz_estimate(d, &weight, ridge, family.dispersion)),
    };

    let mut obj = oracle_objective(d, family, beta.view(), beta0, lambda, alpha);
    let mut trace = if cfg.trace { vec![obj] } else { Vec::new() };
    let mut converged = false;
    let mut iterations = 0;
    let inv_nd = 1.0 / (n as f64 * family.dispersion);

    while iterations < cfg.max_iters {
        iterations += 1;
        let mut grad = vec![0.0; p];
        for (j, slot) in grad.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..n {
                acc += d.x[(i, j)] * (d.y[i] - mean[i]);
            }
            *slot = -acc * inv_nd + ridge * beta[j];
        }

        loop {
            let mut cand = beta.clone();
            for j in 0..p {
                cand[j] = soft(beta[j] - eta_step * grad[j], eta_step * lambda * alpha);
            }
            let mut cand0 = beta0;
            if cfg.fit_intercept {
                let mut m = vec![0.0; n];
                let mut w = vec![0.0; n];
                if mean_weight(d, family, &cand, cand0, &mut m, &mut w).is_ok() {
                    if let Ok(step) = newton_intercept(d, &m, &w) {
                        cand0 += step;
                    }
                }
            }
            let cand_obj = oracle_objective(d, family, cand.view(), cand0, lambda, alpha);
            if cand_obj <= obj {
                let delta = obj - cand_obj;
                beta = cand;
                beta0 = cand0;
                obj = cand_obj;
                mean_weight(d, family, &beta, beta0, &mut mean, &mut weight)?;
                if cfg.trace {
                    trace.push(obj);
                }
                if delta < cfg.tol {
                    converged = true;
                }
                break;
            }
            eta_step *= 0.5;
            if eta_step < 1e-18 {
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }

    Ok(OracleFit { beta, beta0, objective: obj, iterations, converged, trace })
}

/// Exhaustive grid minimization for problems with at most two coefficients.
/// Coefficients are searched over [-10, 10]; the intercept is profiled out by
/// Newton iteration at every grid point. After the initial sweep the grid
/// zooms around the incumbent until the spacing drops below `resolution`,
/// which bounds the coordinatewise distance to the box-constrained optimum
/// by a small multiple of `resolution`.
pub fn micro_grid_solve(
    d: &Dataset,
    family: &FamilySpec,
    lambda: f64,
    alpha: f64,
    resolution: f64,
) -> Result<OracleFit> {
    if d.p() > 2 {
        return Err(EccdError::Config(format!(
            "grid search handles at most 2 coefficients, dataset has {}",
            d.p()
        )));
    }
    if !(resolution > 0.0) {
        return Err(EccdError::Config(format!("resolution must be positive, got {resolution}")));
    }
    let p = d.p();
    let points = 101usize;
    let mut center = vec![0.0; p];
    let mut half_span = 10.0f64;
    let mut best = (Array1::zeros(p), 0.0f64, f64::INFINITY);
    let mut evals = 0usize;

    loop {
        let step = 2.0 * half_span / (points - 1) as f64;
        let axis: Vec<f64> = (0..points)
            .map(|t| (center[0] - half_span + step * t as f64).clamp(-10.0, 10.0))
            .collect();
        let axis2: Vec<f64> = if p == 2 {
            (0..points)
                .map(|t| (center[1] - half_span + step * t as f64).clamp(-10.0, 10.0))
                .collect()
        } else {
            vec![0.0]
        };
        for &b1 in &axis {
            for &b2 in &axis2 {
                let mut beta = Array1::zeros(p);
                beta[0] = b1;
                if p == 2 {
                    beta[1] = b2;
                }
                if let Ok((b0, obj)) = profiled_objective(d, family, &beta, lambda, alpha) {
                    evals += 1;
                    if obj < best.2 {
                        best = (beta, b0, obj);
                    }
                }
            }
        }
        center[0] = best.0[0];
        if p == 2 {
            center[1] = best.0[1];
        }
        if step <= resolution {
            break;
        }
        // Zoom: keep a window a few old steps wide around the incumbent.
        half_span = 2.5 * step;
    }

    Ok(OracleFit {
        beta: best.0,
        beta0: best.1,
        objective: best.2,
        iterations: evals,
        converged: true,
        trace: Vec::new(),
    })
}

/// Objective with the intercept optimized out by Newton iteration.
fn profiled_objective(
    d: &Dataset,
    family: &FamilySpec,
    beta: &Array1<f64>,
    lambda: f64,
    alpha: f64,
) -> Result<(f64, f64)> {
    let n = d.n();
    let ybar = d.y.sum() / n as f64;
    let mut beta0 = family.eta_for_mean(ybar)?;
    let mut mean = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for _ in 0..60 {
        mean_weight(d, family, beta, beta0, &mut mean, &mut weight)?;
        let step = newton_intercept(d, &mean, &weight)?;
        beta0 += step.clamp(-5.0, 5.0);
        if step.abs() < 1e-13 {
            break;
        }
    }
    let obj = oracle_objective(d, family, beta.view(), beta0, lambda, alpha);
    if obj.is_finite() {
        Ok((beta0, obj))
    } else {
        Err(EccdError::Numerical("objective not finite at grid point".into()))
    }
}
