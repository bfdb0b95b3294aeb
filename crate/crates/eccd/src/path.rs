//! Regularization-path orchestration and the deviance machinery.
//!
//! One scale convention governs every correlation-type quantity here: the
//! screening threshold, the KKT check, and the largest useful penalty all
//! compare `(1/n) x_j'(y - F'(eta))` against multiples of `lambda * alpha`.
//! Mixing normalized and unnormalized gradients is the classic way to get
//! screening rules that silently disagree with the solver, so the 1/n factor
//! is applied in exactly one place per quantity and nowhere else.
//!
//! The path driver is glmnet-shaped: a log-equispaced grid from the largest
//! useful penalty down to a configurable fraction of it, warm starts chained
//! from one penalty to the next, a sequential strong rule to keep active sets
//! small, and a KKT recovery pass that makes the heuristic screen safe.

use crate::data::Dataset;
use crate::error::{EccdError, Result};
use crate::families::FamilySpec;
use crate::kernels::{self, SolverState};
use crate::solvers::{solve_with_problem, FitResult, Problem, SolveConfig};
use ndarray::{Array1, ArrayView1, ArrayView2};

/// Absolute slack added to the KKT threshold; exact-zero comparisons on
/// floating-point gradients are meaningless.
pub const KKT_SLACK: f64 = 1e-9;

/// A strictly decreasing penalty grid.
#[derive(Debug, Clone)]
pub struct LambdaPath {
    pub values: Vec<f64>,
    pub min_ratio: f64,
}

impl LambdaPath {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.values[0]
    }
}

/// Default grid depth: shallow for overdetermined problems, where tiny
/// penalties are still well posed, and 0.01 when p exceeds n.
pub fn default_min_ratio(n: usize, p: usize) -> f64 {
    if n < p {
        0.01
    } else {
        1e-4
    }
}

/// Smallest penalty at which the all-zero coefficient vector is optimal,
/// anchored at the intercept-only model:
/// `max_j |(1/n) x_j'(y - F'(beta0_null))| / alpha`.
pub fn lambda_max(d: &Dataset, family: &FamilySpec, alpha: f64) -> Result<f64> {
    if !d.standardized {
        return Err(EccdError::Config("lambda_max requires a standardized dataset".into()));
    }
    if !(alpha > 0.0) {
        return Err(EccdError::Config(format!(
            "lambda_max is undefined for alpha = {alpha}; the ridge penalty never zeroes coefficients"
        )));
    }
    let ybar = d.y.sum() / d.n() as f64;
    let eta0 = family.eta_for_mean(ybar)?;
    let mu0 = family.mean(eta0)?;
    let inv_n = 1.0 / d.n() as f64;
    let mut best = 0.0f64;
    for j in 0..d.p() {
        if d.col_scales[j] == 0.0 {
            continue;
        }
        let mut dot = 0.0;
        for i in 0..d.n() {
            dot += d.x[(i, j)] * (d.y[i] - mu0);
        }
        best = best.max((inv_n * dot).abs());
    }
    if best < 1e-10 {
        return Err(EccdError::Config(
            "degenerate problem: no feature is correlated with the response at the null model"
                .into(),
        ));
    }
    Ok(best / alpha)
}

/// Log-equispaced grid of `k` penalties from `lmax` down to `min_ratio*lmax`,
/// with both endpoints exact.
pub fn build_path(lmax: f64, k: usize, min_ratio: f64) -> Result<LambdaPath> {
    if !(lmax > 0.0) || !lmax.is_finite() {
        return Err(EccdError::Config(format!("lambda_max must be positive, got {lmax}")));
    }
    if k == 0 {
        return Err(EccdError::Config("path length must be at least 1".into()));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(EccdError::Config(format!("min_ratio must lie in (0, 1), got {min_ratio}")));
    }
    let mut values = Vec::with_capacity(k);
    if k == 1 {
        values.push(lmax);
    } else {
        let log_step = min_ratio.ln() / (k - 1) as f64;
        for i in 0..k {
            values.push(lmax * (log_step * i as f64).exp());
        }
        values[0] = lmax;
        values[k - 1] = lmax * min_ratio;
    }
    Ok(LambdaPath { values, min_ratio })
}

/// Gradient correlations `(1/n) x_j'(y - F'(beta0 + X beta))` for every
/// column, zero for degenerate columns.
fn correlations(d: &Dataset, family: &FamilySpec, state: &SolverState) -> Result<Array1<f64>> {
    let eta = d.x.dot(&state.beta) + state.beta0;
    let mut mean = vec![0.0; d.n()];
    let mut weight = vec![0.0; d.n()];
    family.mean_weight_into(eta.view(), &mut mean, &mut weight);
    let inv_n = 1.0 / d.n() as f64;
    let mut corr = Array1::zeros(d.p());
    for j in 0..d.p() {
        if d.col_scales[j] == 0.0 && d.standardized {
            continue;
        }
        let mut dot = 0.0;
        for i in 0..d.n() {
            dot += d.x[(i, j)] * (d.y[i] - mean[i]);
        }
        corr[j] = inv_n * dot;
    }
    Ok(corr)
}

/// Sequential strong rule: keep the previous support plus every coordinate
/// whose gradient correlation at the previous solution clears
/// `(2 lambda_k - lambda_prev) * alpha`. Returned in the solver's insertion
/// order: previous nonzeros first (ascending), then new admits (ascending).
pub fn strong_rule_set(
    d: &Dataset,
    family: &FamilySpec,
    state_prev: &SolverState,
    lambda_k: f64,
    lambda_prev: f64,
    alpha: f64,
) -> Result<Vec<usize>> {
    let corr = correlations(d, family, state_prev)?;
    Ok(strong_rule_from_corr(
        corr.view(),
        state_prev.beta.view(),
        lambda_k,
        lambda_prev,
        alpha,
    ))
}

pub(crate) fn strong_rule_from_corr(
    corr: ArrayView1<f64>,
    beta_prev: ArrayView1<f64>,
    lambda_k: f64,
    lambda_prev: f64,
    alpha: f64,
) -> Vec<usize> {
    let threshold = (2.0 * lambda_k - lambda_prev) * alpha;
    let p = corr.len();
    let mut out = Vec::new();
    let mut taken = vec![false; p];
    for j in 0..p {
        if beta_prev[j] != 0.0 {
            out.push(j);
            taken[j] = true;
        }
    }
    for j in 0..p {
        if !taken[j] && corr[j].abs() >= threshold {
            out.push(j);
        }
    }
    out
}

/// All coordinates outside `state.active` whose gradient correlation exceeds
/// the penalty threshold. An empty result certifies that the restricted
/// optimum is the global optimum of the convex problem.
pub fn kkt_scan(
    d: &Dataset,
    family: &FamilySpec,
    state: &SolverState,
    lambda: f64,
    alpha: f64,
) -> Result<Vec<usize>> {
    let corr = correlations(d, family, state)?;
    let mut in_active = vec![false; d.p()];
    for &j in &state.active {
        in_active[j] = true;
    }
    let threshold = lambda * alpha + KKT_SLACK;
    Ok((0..d.p())
        .filter(|&j| !in_active[j] && corr[j].abs() > threshold)
        .collect())
}

/// Worst stationarity residual over all coordinates: for a nonzero
/// coefficient the gradient must balance the penalty subgradient exactly,
/// for a zero coefficient the gradient magnitude may not exceed
/// `lambda * alpha`.
pub fn kkt_max_residual(
    d: &Dataset,
    family: &FamilySpec,
    beta: ArrayView1<f64>,
    beta0: f64,
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    if beta.len() != d.p() {
        return Err(EccdError::Dimension(format!(
            "beta has {} entries for {} columns",
            beta.len(),
            d.p()
        )));
    }
    let eta = d.x.dot(&beta) + beta0;
    let mut mean = vec![0.0; d.n()];
    let mut weight = vec![0.0; d.n()];
    family.mean_weight_into(eta.view(), &mut mean, &mut weight);
    let inv_n = 1.0 / d.n() as f64;
    let mut worst = 0.0f64;
    for j in 0..d.p() {
        if d.standardized && d.col_scales[j] == 0.0 {
            continue;
        }
        let mut dot = 0.0;
        for i in 0..d.n() {
            dot += d.x[(i, j)] * (d.y[i] - mean[i]);
        }
        let corr = inv_n * dot;
        let r = if beta[j] != 0.0 {
            (corr - lambda * (1.0 - alpha) * beta[j] - lambda * alpha * beta[j].signum()).abs()
        } else {
            (corr.abs() - lambda * alpha).max(0.0)
        };
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Log-likelihood of the saturated model (one free mean per observation).
pub fn saturated_log_likelihood(y: ArrayView1<f64>, family: &FamilySpec) -> Result<f64> {
    let mut total = 0.0;
    for &yi in y.iter() {
        total += family.saturated_term(yi)?;
    }
    Ok(total / family.dispersion)
}

/// Deviance of the intercept-only model: `-2 (l_null - l_sat)` with the null
/// intercept chosen so the fitted mean equals the sample mean.
pub fn null_deviance(y: ArrayView1<f64>, family: &FamilySpec) -> Result<f64> {
    if y.is_empty() {
        return Err(EccdError::Dimension("empty response".into()));
    }
    let ybar = y.sum() / y.len() as f64;
    let eta0 = family.eta_for_mean(ybar)?;
    let eta = Array1::from_elem(y.len(), eta0);
    let ll_null = family.log_likelihood(y, eta.view())?;
    let ll_sat = saturated_log_likelihood(y, family)?;
    Ok(-2.0 * (ll_null - ll_sat))
}

/// Deviance-scale convergence test on one epoch's movement. The intercept
/// criterion weights the squared intercept change by the total curvature;
/// the coefficient criterion weights each squared coefficient change by that
/// column's curvature, with the block size loosening the bound. Both must
/// hold.
///
/// The two criteria are combined conjunctively: requiring only one of them
/// lets a centered design declare convergence the moment the intercept
/// settles, which for the Gaussian family happens on the second epoch with
/// the coefficients still in flight.
pub(crate) fn converged_from_changes(
    delta_beta0: f64,
    changes: &[(usize, f64)],
    weight: &[f64],
    xt: ArrayView2<f64>,
    tol: f64,
    null_dev: f64,
    block_size: usize,
) -> bool {
    debug_assert!(null_dev > 0.0, "null deviance must be positive");
    let w_total: f64 = weight.iter().sum();
    let l0 = w_total * delta_beta0 * delta_beta0;
    if !(l0 < tol * null_dev) {
        return false;
    }
    let bound = tol * null_dev * block_size as f64;
    for &(j, dj) in changes {
        if dj == 0.0 {
            continue;
        }
        let lj = kernels::weighted_column_sq_norm(xt, j, weight) * dj * dj;
        if !(lj < bound) {
            return false;
        }
    }
    true
}

/// Convergence test between two recorded states, with curvature evaluated at
/// the current iterate. Convenience wrapper over the check the solver runs
/// each epoch.
pub fn deviance_converged(
    d: &Dataset,
    family: &FamilySpec,
    state_prev: &SolverState,
    state: &SolverState,
    tol: f64,
    null_dev: f64,
    block_size: usize,
) -> Result<bool> {
    if !(null_dev > 0.0) {
        return Err(EccdError::Config(format!(
            "null deviance must be positive, got {null_dev}"
        )));
    }
    if state_prev.beta.len() != state.beta.len() {
        return Err(EccdError::Dimension("state shapes differ".into()));
    }
    let eta = d.x.dot(&state.beta) + state.beta0;
    let mut mean = vec![0.0; d.n()];
    let mut weight = vec![0.0; d.n()];
    family.mean_weight_into(eta.view(), &mut mean, &mut weight);
    let xt = d.x.t().as_standard_layout().to_owned();
    let changes: Vec<(usize, f64)> = state
        .active
        .iter()
        .map(|&j| (j, state.beta[j] - state_prev.beta[j]))
        .collect();
    Ok(converged_from_changes(
        state.beta0 - state_prev.beta0,
        &changes,
        &weight,
        xt.view(),
        tol,
        null_dev,
        block_size,
    ))
}

/// Settings for a full path solve. `solve.lambda` is ignored; every other
/// field of `solve` applies to each penalty on the grid.
#[derive(Debug, Clone)]
pub struct PathConfig {
    pub solve: SolveConfig,
    pub screening: bool,
    pub warm_start: bool,
    pub early_stop: bool,
    /// Stop once the support exceeds this size; default min(p, 5n).
    pub ne_limit: Option<usize>,
    /// Stop once the deviance-explained ratio exceeds this.
    pub rsq_max: f64,
    /// Stop once the per-step deviance improvement, relative to twice the
    /// null deviance, falls below this.
    pub sml: f64,
}

impl PathConfig {
    pub fn new(solve: SolveConfig) -> Self {
        PathConfig {
            solve,
            screening: true,
            warm_start: true,
            early_stop: true,
            ne_limit: None,
            rsq_max: 0.999,
            sml: 1e-5,
        }
    }
}

/// A fitted path.
#[derive(Debug)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub fits: Vec<FitResult>,
    /// Active-set size at the end of each penalty's solve.
    pub active_sizes: Vec<usize>,
    pub stopped_early_at: Option<usize>,
    pub stop_reason: Option<String>,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }
}

/// Fit every penalty on the grid in decreasing order, warm-starting each from
/// the previous solution. The first grid point is emitted as the null model
/// directly when it is at least the data's own largest useful penalty. A fit
/// that fails to converge within the epoch budget is recorded with its flag
/// and the path continues from it.
pub fn solve_path(
    d: &Dataset,
    family: &FamilySpec,
    path: &LambdaPath,
    cfg: &PathConfig,
) -> Result<PathResult> {
    if path.values.is_empty() {
        return Err(EccdError::Config("empty penalty grid".into()));
    }
    for w in path.values.windows(2) {
        if !(w[1] < w[0]) {
            return Err(EccdError::Config("penalty grid must be strictly decreasing".into()));
        }
    }
    let prob = Problem::new(d, family)?;
    let n = prob.n();
    let p = prob.p();
    let alpha = cfg.solve.alpha;
    let ne_limit = cfg.ne_limit.unwrap_or_else(|| p.min(5 * n));
    let all_active: Vec<usize> =
        (0..p).filter(|&j| !prob.degenerate[j]).collect();

    let mut fits: Vec<FitResult> = Vec::with_capacity(path.k());
    let mut active_sizes: Vec<usize> = Vec::with_capacity(path.k());
    let mut stopped_early_at = None;
    let mut stop_reason: Option<String> = None;

    // State and gradient correlations at the most recent solution.
    let mut prev_state: Option<SolverState> = None;
    let mut prev_corr: Option<Array1<f64>> = None;
    let mut start_k = 0;

    if alpha > 0.0 && cfg.solve.fit_intercept {
        let lmax_data = lambda_max(d, family, alpha)?;
        if path.values[0] >= lmax_data * (1.0 - 1e-12) {
            // The null model is exactly optimal here; emit it without solving.
            let mut st = SolverState::new(n, p);
            st.beta0 = prob.null_intercept;
            let corr = correlations(d, family, &st)?;
            let objective = crate::solvers::objective(
                d,
                family,
                st.beta.view(),
                st.beta0,
                path.values[0],
                alpha,
            )?;
            fits.push(FitResult {
                beta: st.beta.clone(),
                beta0: st.beta0,
                objective,
                deviance: prob.null_deviance,
                null_deviance: prob.null_deviance,
                epochs: 0,
                converged: true,
                aborted: false,
                timings: Default::default(),
                seconds: 0.0,
            });
            active_sizes.push(0);
            prev_state = Some(st);
            prev_corr = Some(corr);
            start_k = 1;
        }
    }

    for k in start_k..path.k() {
        let lambda_k = path.values[k];
        let mut solve_cfg = cfg.solve.clone();
        solve_cfg.lambda = lambda_k;

        let warm_arg: Option<SolverState> = match (&prev_state, cfg.warm_start) {
            (Some(prev), true) => {
                let mut st = prev.clone();
                st.active = if cfg.screening {
                    let corr = prev_corr.as_ref().expect("correlations tracked with state");
                    let lambda_prev = path.values[k - 1];
                    strong_rule_from_corr(
                        corr.view(),
                        prev.beta.view(),
                        lambda_k,
                        lambda_prev,
                        alpha,
                    )
                } else {
                    all_active.clone()
                };
                Some(st)
            }
            (_, false) if !cfg.screening => {
                let mut st = SolverState::new(n, p);
                st.beta0 = if cfg.solve.fit_intercept { prob.null_intercept } else { 0.0 };
                st.active = all_active.clone();
                Some(st)
            }
            // Cold with screening: the solver's own null-anchored screen.
            _ => None,
        };

        let out = solve_with_problem(
            &prob,
            &solve_cfg,
            warm_arg.as_ref(),
            cfg.screening,
            &mut |_| {},
        )?;
        let fit = out.fit;
        let nnz = fit.n_nonzero();
        let dev_prev = fits.last().map(|f| f.deviance);
        fits.push(fit);
        active_sizes.push(out.state.active.len());
        prev_state = Some(out.state);
        prev_corr = out.final_corr;

        if cfg.early_stop {
            let fit = fits.last().expect("just pushed");
            let reason = if nnz > ne_limit {
                Some(format!("support size {nnz} exceeded limit {ne_limit}"))
            } else if 1.0 - fit.deviance / prob.null_deviance > cfg.rsq_max {
                Some(format!(
                    "deviance-explained ratio exceeded {}",
                    cfg.rsq_max
                ))
            } else if let Some(prev) = dev_prev {
                let change = (prev - fit.deviance) / (2.0 * prob.null_deviance);
                if change < cfg.sml {
                    Some(format!(
                        "deviance improvement {change:.3e} below threshold {:.3e}",
                        cfg.sml
                    ))
                } else {
                    None
                }
            } else {
                None
            };
            if let Some(reason) = reason {
                stopped_early_at = Some(fits.len() - 1);
                stop_reason = Some(reason);
                break;
            }
        }
    }

    Ok(PathResult {
        lambdas: path.values[..fits.len()].to_vec(),
        fits,
        active_sizes,
        stopped_early_at,
        stop_reason,
    })
}
