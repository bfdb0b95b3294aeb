//! Penalized-likelihood solvers built around one shared coordinate kernel.
//!
//! Three engines differ only in how stale their gradient information is
//! allowed to get:
//!
//! * `cd` refreshes F' and F'' before every single-coordinate update,
//! * `bcd` freezes both at block entry and applies raw stale updates,
//! * `eccd` freezes both at block entry but corrects each coordinate's
//!   gradient with the curvature-weighted sum of the deltas already applied
//!   inside the block.
//!
//! `cd` is literally the block engine run with block size one, which is what
//! makes the equivalence tests between the engines exact rather than
//! approximate. All engines share the update
//!
//! ```text
//!   beta_j <- S(beta_j + phi/psi, lambda*alpha/psi)
//!   phi = (x_j'y - x_j'F' - correction)/(n d) - lambda(1-alpha) beta_j
//!   psi = (x_j' F'' x_j)/(n d) + lambda(1-alpha)
//! ```
//!
//! so curvature always enters as a positive quantity in the denominator.

use crate::data::Dataset;
use crate::error::{EccdError, Result};
use crate::families::FamilySpec;
use crate::kernels::{self, soft_threshold, SolverState};
use crate::path;
use crate::timing::{Phase, PhaseBreakdown, PhaseTimer};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use std::time::Instant;

/// Update engine selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Cd,
    Bcd,
    Eccd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cd => "cd",
            Algorithm::Bcd => "bcd",
            Algorithm::Eccd => "eccd",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cd" => Ok(Algorithm::Cd),
            "bcd" => Ok(Algorithm::Bcd),
            "eccd" => Ok(Algorithm::Eccd),
            other => Err(EccdError::Config(format!(
                "unknown algorithm `{other}` (expected cd, bcd, or eccd)"
            ))),
        }
    }
}

/// Settings for one penalized fit.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub algorithm: Algorithm,
    pub block_size: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub fit_intercept: bool,
    /// Shrink the block size to floor(sqrt(|active|)) once the active set is
    /// smaller than block_size^2 (eccd only).
    pub active_set_cap: bool,
    /// Abort the fit once the objective exceeds this bound.
    pub max_objective: f64,
    /// Collect the per-phase time breakdown.
    pub timings: bool,
}

impl SolveConfig {
    pub fn new(algorithm: Algorithm, lambda: f64, alpha: f64) -> Self {
        SolveConfig {
            algorithm,
            block_size: 8,
            lambda,
            alpha,
            tol: 1e-7,
            max_epochs: 10_000,
            fit_intercept: true,
            active_set_cap: true,
            max_objective: 1e12,
            timings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(EccdError::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !self.alpha.is_finite() || !(0.0..=1.0).contains(&self.alpha) {
            return Err(EccdError::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.block_size == 0 {
            return Err(EccdError::Config("block size must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(EccdError::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(EccdError::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a single-penalty fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: Array1<f64>,
    pub beta0: f64,
    pub objective: f64,
    pub deviance: f64,
    pub null_deviance: f64,
    pub epochs: usize,
    pub converged: bool,
    /// True when the objective guard tripped (runaway iterates).
    pub aborted: bool,
    pub timings: PhaseBreakdown,
    pub seconds: f64,
}

impl FitResult {
    pub fn n_nonzero(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }
}

/// Block size actually used for a sweep.
///
/// `cd` is defined as block size one. `bcd` uses the configured size as is.
/// `eccd` additionally shrinks to floor(sqrt(|active|)) once the active set
/// drops below block_size^2, unless the cap is disabled.
pub fn effective_block_size(
    algorithm: Algorithm,
    block_size: usize,
    active_set_cap: bool,
    active_len: usize,
) -> usize {
    match algorithm {
        Algorithm::Cd => 1,
        Algorithm::Bcd => block_size.max(1),
        Algorithm::Eccd => {
            let s = block_size.max(1);
            if active_set_cap && active_len < s * s {
                active_len.isqrt().max(1)
            } else {
                s
            }
        }
    }
}

/// Penalized objective evaluated from scratch.
pub fn objective(
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
    let ll = family.log_likelihood(d.y.view(), eta.view())?;
    Ok(-ll / d.n() as f64 + penalty(beta, lambda, alpha))
}

fn penalty(beta: ArrayView1<f64>, lambda: f64, alpha: f64) -> f64 {
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for &b in beta.iter() {
        l1 += b.abs();
        l2 += b * b;
    }
    lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
}

/// One Newton step for the intercept given the current linear predictor:
/// returns `sum(y - F') / sum(F'')`.
pub fn intercept_update(
    y: ArrayView1<f64>,
    eta: ArrayView1<f64>,
    family: &FamilySpec,
) -> Result<f64> {
    if y.len() != eta.len() {
        return Err(EccdError::Dimension("y and eta lengths differ".into()));
    }
    let mut mean = vec![0.0; eta.len()];
    let mut weight = vec![0.0; eta.len()];
    family.mean_weight_into(eta, &mut mean, &mut weight);
    intercept_step_core(y, &mean, &weight)
}

pub(crate) fn intercept_step_core(y: ArrayView1<f64>, mean: &[f64], weight: &[f64]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        num += yi - mean[i];
        den += weight[i];
    }
    if !(den > 1e-12) {
        return Err(EccdError::Saturation(format!(
            "total curvature {den} too small for an intercept step"
        )));
    }
    Ok(num / den)
}

/// Apply the in-block scalar updates for coordinates `indices`, given block
/// quantities frozen at block entry. Returns the per-coordinate deltas; the
/// caller is responsible for pushing them into the linear predictor via
/// `update_linear_predictor`. With `taylor_correction` off this is the naive
/// stale-gradient block update.
#[allow(clippy::too_many_arguments)]
pub fn eccd_block_update(
    xt: ArrayView2<f64>,
    xty: ArrayView1<f64>,
    mean: &[f64],
    weight: &[f64],
    beta: &mut Array1<f64>,
    indices: &[usize],
    family: &FamilySpec,
    lambda: f64,
    alpha: f64,
    taylor_correction: bool,
) -> Result<Vec<f64>> {
    let s = indices.len();
    let n = xt.ncols();
    let mut a = vec![0.0; s];
    let mut b = vec![0.0; s * s];
    kernels::compute_block_into(xt, mean, weight, indices, &mut a, &mut b);
    let mut delta = vec![0.0; s];
    let inv_nd = 1.0 / (n as f64 * family.dispersion);
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    block_scalar_updates(
        &a,
        &b,
        s,
        indices,
        xty,
        beta,
        inv_nd,
        l1,
        l2,
        taylor_correction,
        &mut delta,
        &mut f64::NEG_INFINITY.clone(),
    )?;
    Ok(delta)
}

/// The shared scalar kernel: one soft-threshold update per block coordinate,
/// consuming the deltas already applied inside the block when the Taylor
/// correction is on.
#[allow(clippy::too_many_arguments)]
fn block_scalar_updates(
    a: &[f64],
    b: &[f64],
    s: usize,
    indices: &[usize],
    xty: ArrayView1<f64>,
    beta: &mut Array1<f64>,
    inv_nd: f64,
    l1: f64,
    l2: f64,
    taylor_correction: bool,
    delta: &mut [f64],
    max_abs_beta: &mut f64,
) -> Result<()> {
    for l in 0..indices.len() {
        let j = indices[l];
        let mut correction = 0.0;
        if taylor_correction {
            for q in 0..l {
                correction += b[l * s + q] * delta[q];
            }
        }
        let bj = beta[j];
        let phi = inv_nd * (xty[j] - a[l] - correction) - l2 * bj;
        let psi = inv_nd * b[l * s + l] + l2;
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(EccdError::Numerical(format!(
                "non-positive curvature {psi} at coordinate {j}"
            )));
        }
        let new = soft_threshold(bj + phi / psi, l1 / psi);
        delta[l] = new - bj;
        if new != bj {
            beta[j] = new;
        }
        let mag = new.abs();
        if mag > *max_abs_beta {
            *max_abs_beta = mag;
        }
    }
    Ok(())
}

/// Immutable per-problem quantities shared across penalties: the transposed
/// design, precomputed x_j'y, degeneracy flags, and the null-model summaries
/// that anchor convergence thresholds.
#[derive(Debug)]
pub(crate) struct Problem {
    pub xt: Array2<f64>,
    pub xty: Array1<f64>,
    pub y: Array1<f64>,
    pub degenerate: Vec<bool>,
    pub family: FamilySpec,
    pub null_intercept: f64,
    pub null_deviance: f64,
    pub saturated_ll: f64,
}

impl Problem {
    pub(crate) fn new(d: &Dataset, family: &FamilySpec) -> Result<Self> {
        if !d.standardized {
            return Err(EccdError::Config(
                "solvers require a standardized design; call Dataset::standardize first".into(),
            ));
        }
        if d.n() == 0 || d.p() == 0 {
            return Err(EccdError::Dimension("empty design matrix".into()));
        }
        let xt = d.x.t().as_standard_layout().to_owned();
        let xty = xt.dot(&d.y);
        let degenerate: Vec<bool> = d.col_scales.iter().map(|&s| s == 0.0).collect();
        let ybar = d.y.sum() / d.n() as f64;
        let null_intercept = family.eta_for_mean(ybar)?;
        let saturated_ll = path::saturated_log_likelihood(d.y.view(), family)?;
        let null_deviance = path::null_deviance(d.y.view(), family)?;
        if !(null_deviance > 0.0) {
            return Err(EccdError::Config(format!(
                "null deviance is {null_deviance}; a constant response cannot anchor the \
                 deviance-scale convergence test"
            )));
        }
        Ok(Problem {
            xt,
            xty,
            y: d.y.clone(),
            degenerate,
            family: *family,
            null_intercept,
            null_deviance,
            saturated_ll,
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.xt.ncols()
    }

    pub(crate) fn p(&self) -> usize {
        self.xt.nrows()
    }

    pub(crate) fn inv_nd(&self) -> f64 {
        1.0 / (self.n() as f64 * self.family.dispersion)
    }
}

struct SweepStats {
    s_eff: usize,
    needs_guard: bool,
}

/// Rich solve output kept crate-internal; the public API returns `FitResult`.
pub(crate) struct InternalFit {
    pub fit: FitResult,
    pub state: SolverState,
    /// (1/nd) x_j'(y - F') at the final iterate, for sequential screening.
    pub final_corr: Option<Array1<f64>>,
}

pub(crate) struct Engine<'a> {
    prob: &'a Problem,
    cfg: &'a SolveConfig,
    inv_nd: f64,
    /// Correlation-type quantities (KKT, screening) are 1/n-normalized with
    /// no dispersion factor; the update scale `inv_nd` is not reused there.
    inv_n: f64,
    l1: f64,
    l2: f64,
    mean: Vec<f64>,
    weight: Vec<f64>,
    eta: Vec<f64>,
    blk_a: Vec<f64>,
    blk_b: Vec<f64>,
    blk_idx: Vec<usize>,
    blk_delta: Vec<f64>,
    active_mask: Vec<bool>,
    changes: Vec<(usize, f64)>,
    timer: PhaseTimer,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(prob: &'a Problem, cfg: &'a SolveConfig) -> Self {
        let n = prob.n();
        let s = cfg.block_size.max(1);
        Engine {
            prob,
            cfg,
            inv_nd: prob.inv_nd(),
            inv_n: 1.0 / n as f64,
            l1: cfg.lambda * cfg.alpha,
            l2: cfg.lambda * (1.0 - cfg.alpha),
            mean: vec![0.0; n],
            weight: vec![0.0; n],
            eta: vec![0.0; n],
            blk_a: vec![0.0; s],
            blk_b: vec![0.0; s * s],
            blk_idx: Vec::with_capacity(s),
            blk_delta: vec![0.0; s],
            active_mask: vec![false; prob.p()],
            changes: Vec::new(),
            timer: PhaseTimer::new(cfg.timings),
        }
    }

    fn set_active_mask(&mut self, active: &[usize]) {
        self.active_mask.fill(false);
        for &j in active {
            self.active_mask[j] = true;
        }
    }

    fn ensure_fresh(&mut self, state: &mut SolverState) {
        if state.grad_fresh {
            return;
        }
        let t0 = self.timer.begin();
        for i in 0..self.eta.len() {
            self.eta[i] = state.beta0 + state.z[i];
        }
        self.prob.family.mean_weight_into(
            ArrayView1::from(&self.eta),
            &mut self.mean,
            &mut self.weight,
        );
        state.grad_fresh = true;
        self.timer.end(Phase::GradientEval, t0);
    }

    fn intercept_step(&mut self, state: &mut SolverState) -> Result<f64> {
        self.ensure_fresh(state);
        let t0 = self.timer.begin();
        let step = intercept_step_core(self.prob.y.view(), &self.mean, &self.weight)?;
        if step != 0.0 {
            state.beta0 += step;
            state.grad_fresh = false;
        }
        self.timer.end(Phase::CoefUpdate, t0);
        Ok(step)
    }

    /// One full cycle over the active set in blocks, refreshing the gradient
    /// caches at block entry only when a previous update moved the predictor.
    fn sweep(&mut self, state: &mut SolverState) -> Result<SweepStats> {
        let active_len = state.active.len();
        let s_eff = effective_block_size(
            self.cfg.algorithm,
            self.cfg.block_size,
            self.cfg.active_set_cap,
            active_len,
        );
        let taylor = self.cfg.algorithm != Algorithm::Bcd;
        self.changes.clear();
        let mut max_abs_beta: f64 = 0.0;
        let mut start = 0;
        while start < active_len {
            let end = (start + s_eff).min(active_len);
            let bs = end - start;
            self.blk_idx.clear();
            self.blk_idx.extend_from_slice(&state.active[start..end]);

            self.ensure_fresh(state);

            let t0 = self.timer.begin();
            kernels::compute_block_into(
                self.prob.xt.view(),
                &self.mean,
                &self.weight,
                &self.blk_idx,
                &mut self.blk_a[..bs],
                &mut self.blk_b[..bs * bs],
            );
            self.timer.end(Phase::BlockBuild, t0);

            let t0 = self.timer.begin();
            block_scalar_updates(
                &self.blk_a[..bs],
                &self.blk_b[..bs * bs],
                bs,
                &self.blk_idx,
                self.prob.xty.view(),
                &mut state.beta,
                self.inv_nd,
                self.l1,
                self.l2,
                taylor,
                &mut self.blk_delta[..bs],
                &mut max_abs_beta,
            )?;
            let mut any = false;
            for l in 0..bs {
                let dl = self.blk_delta[l];
                if dl != 0.0 {
                    any = true;
                    self.changes.push((self.blk_idx[l], dl));
                }
            }
            if any {
                kernels::update_linear_predictor(
                    &mut state.z,
                    self.prob.xt.view(),
                    &self.blk_idx,
                    &self.blk_delta[..bs],
                );
                state.grad_fresh = false;
            }
            self.timer.end(Phase::CoefUpdate, t0);

            start = end;
        }
        let needs_guard = !max_abs_beta.is_finite() || max_abs_beta > 1e6;
        Ok(SweepStats { s_eff, needs_guard })
    }

    fn converged(&mut self, state: &mut SolverState, delta_beta0: f64, s_eff: usize) -> bool {
        self.ensure_fresh(state);
        let t0 = self.timer.begin();
        let ok = path::converged_from_changes(
            delta_beta0,
            &self.changes,
            &self.weight,
            self.prob.xt.view(),
            self.cfg.tol,
            self.prob.null_deviance,
            s_eff,
        );
        self.timer.end(Phase::ConvergenceCheck, t0);
        ok
    }

    /// Scan inactive coordinates for KKT violations; optionally record the
    /// gradient correlation of every coordinate for sequential screening.
    fn kkt_violators(
        &mut self,
        state: &mut SolverState,
        mut corr_out: Option<&mut Array1<f64>>,
    ) -> Vec<usize> {
        self.ensure_fresh(state);
        let t0 = self.timer.begin();
        let mut violators = Vec::new();
        let mean_view = ArrayView1::from(&self.mean[..]);
        for j in 0..self.prob.p() {
            if self.prob.degenerate[j] {
                if let Some(ref mut c) = corr_out {
                    c[j] = 0.0;
                }
                continue;
            }
            let in_active = self.active_mask[j];
            if in_active && corr_out.is_none() {
                continue;
            }
            let corr = self.inv_n
                * (self.prob.xty[j] - kernels::column_dot(self.prob.xt.view(), j, mean_view));
            if let Some(ref mut c) = corr_out {
                c[j] = corr;
            }
            if !in_active && corr.abs() > self.l1 + path::KKT_SLACK {
                violators.push(j);
            }
        }
        self.timer.end(Phase::Screening, t0);
        violators
    }

    /// Recompute z = X beta exactly, clearing accumulated drift.
    fn resync_z(&mut self, state: &mut SolverState) {
        let t0 = self.timer.begin();
        state.z.fill(0.0);
        let zs = state.z.as_slice_mut().expect("z is contiguous");
        for j in 0..self.prob.p() {
            let bj = state.beta[j];
            if bj == 0.0 {
                continue;
            }
            let col = self.prob.xt.row(j);
            let col = col.as_slice().expect("transposed design rows are contiguous");
            for i in 0..zs.len() {
                zs[i] += bj * col[i];
            }
        }
        state.grad_fresh = false;
        self.timer.end(Phase::CoefUpdate, t0);
    }

    /// Objective from the cached predictor; +inf when out of domain or
    /// overflowing, which the abort guard treats as runaway.
    fn objective_from_cache(&self, state: &SolverState) -> f64 {
        let fam = &self.prob.family;
        let mut ll = 0.0;
        for (i, &zi) in state.z.iter().enumerate() {
            let eta = state.beta0 + zi;
            match fam.cgf(eta) {
                Ok(f) => ll += self.prob.y[i] * eta - f,
                Err(_) => return f64::INFINITY,
            }
        }
        ll /= fam.dispersion;
        let nll = -ll / self.prob.n() as f64;
        let pen = penalty(state.beta.view(), self.cfg.lambda, self.cfg.alpha);
        let obj = nll + pen;
        if obj.is_nan() {
            f64::INFINITY
        } else {
            obj
        }
    }

    fn deviance_from_cache(&self, state: &SolverState) -> f64 {
        let fam = &self.prob.family;
        let mut ll = 0.0;
        for (i, &zi) in state.z.iter().enumerate() {
            let eta = state.beta0 + zi;
            match fam.cgf(eta) {
                Ok(f) => ll += self.prob.y[i] * eta - f,
                Err(_) => return f64::INFINITY,
            }
        }
        ll /= fam.dispersion;
        -2.0 * (ll - self.prob.saturated_ll)
    }
}

/// Fit one penalty value. `warm_start` seeds coefficients and the active set;
/// a cold start begins at the null model with a strong-rule screened active
/// set. Non-convergence within `max_epochs` and objective-guard aborts are
/// reported through flags on the result, not as errors.
pub fn solve_single_lambda(
    d: &Dataset,
    family: &FamilySpec,
    cfg: &SolveConfig,
    warm_start: Option<&SolverState>,
) -> Result<FitResult> {
    let prob = Problem::new(d, family)?;
    let out = solve_with_problem(&prob, cfg, warm_start, false, &mut |_| {})?;
    Ok(out.fit)
}

/// Like `solve_single_lambda`, invoking `observer` with the state at the end
/// of every epoch. Intended for tests and diagnostics that track iterates.
pub fn solve_single_lambda_observed(
    d: &Dataset,
    family: &FamilySpec,
    cfg: &SolveConfig,
    warm_start: Option<&SolverState>,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<FitResult> {
    let prob = Problem::new(d, family)?;
    let out = solve_with_problem(&prob, cfg, warm_start, false, observer)?;
    Ok(out.fit)
}

pub(crate) fn solve_with_problem(
    prob: &Problem,
    cfg: &SolveConfig,
    warm_start: Option<&SolverState>,
    want_final_corr: bool,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<InternalFit> {
    cfg.validate()?;
    let t_start = Instant::now();
    let n = prob.n();
    let p = prob.p();

    let mut engine = Engine::new(prob, cfg);
    let mut state = match warm_start {
        Some(w) => {
            if w.beta.len() != p || w.z.len() != n {
                return Err(EccdError::Dimension(
                    "warm-start state does not match the problem shape".into(),
                ));
            }
            let mut st = w.clone();
            st.epoch = 0;
            // Nonzero coordinates must be active even if the caller's list
            // drifted; keep the caller's insertion order and append.
            let mut seen = vec![false; p];
            st.active.retain(|&j| {
                let keep = !seen[j] && !prob.degenerate[j];
                seen[j] = true;
                keep
            });
            for j in 0..p {
                if st.beta[j] != 0.0 && !seen[j] {
                    st.active.push(j);
                    seen[j] = true;
                }
            }
            engine.resync_z(&mut st);
            st.grad_fresh = false;
            st
        }
        None => {
            let mut st = SolverState::new(n, p);
            st.beta0 = if cfg.fit_intercept { prob.null_intercept } else { 0.0 };
            st.grad_fresh = false;
            if cfg.alpha > 0.0 {
                // Sequential strong rule anchored at the null model, taking
                // the largest null correlation as the previous penalty.
                engine.ensure_fresh(&mut st);
                let mut corr0 = vec![0.0; p];
                let mut lmax_alpha: f64 = 0.0;
                let mean_view = ArrayView1::from(&engine.mean[..]);
                for j in 0..p {
                    if prob.degenerate[j] {
                        continue;
                    }
                    let c = engine.inv_n
                        * (prob.xty[j] - kernels::column_dot(prob.xt.view(), j, mean_view));
                    corr0[j] = c;
                    lmax_alpha = lmax_alpha.max(c.abs());
                }
                let threshold = 2.0 * cfg.lambda * cfg.alpha - lmax_alpha;
                for (j, &c) in corr0.iter().enumerate() {
                    if !prob.degenerate[j] && c.abs() >= threshold {
                        st.active.push(j);
                    }
                }
            } else {
                st.active = (0..p).filter(|&j| !prob.degenerate[j]).collect();
            }
            st
        }
    };
    engine.set_active_mask(&state.active);

    let (converged, aborted) = loop {
        if state.epoch > 0 && state.epoch % 50 == 0 {
            engine.resync_z(&mut state);
        }
        state.epoch += 1;

        let delta_beta0 =
            if cfg.fit_intercept { engine.intercept_step(&mut state)? } else { 0.0 };
        let stats = engine.sweep(&mut state)?;

        let mut exit = None;
        if stats.needs_guard {
            let obj = engine.objective_from_cache(&state);
            if !obj.is_finite() || obj > cfg.max_objective {
                exit = Some((false, true));
            }
        }
        if exit.is_none() {
            let conv_now = engine.converged(&mut state, delta_beta0, stats.s_eff);
            if conv_now || state.epoch == 1 {
                let violators = engine.kkt_violators(&mut state, None);
                if violators.is_empty() {
                    if conv_now {
                        exit = Some((true, false));
                    }
                } else {
                    for j in violators {
                        state.active.push(j);
                        engine.active_mask[j] = true;
                    }
                }
            }
            if exit.is_none() && state.epoch >= cfg.max_epochs {
                exit = Some((false, false));
            }
        }

        observer(&state);
        if let Some(flags) = exit {
            break flags;
        }
    };

    engine.resync_z(&mut state);
    let final_corr = if want_final_corr {
        let mut corr = Array1::zeros(p);
        engine.kkt_violators(&mut state, Some(&mut corr));
        Some(corr)
    } else {
        None
    };

    let objective = engine.objective_from_cache(&state);
    let deviance = engine.deviance_from_cache(&state);
    let fit = FitResult {
        beta: state.beta.clone(),
        beta0: state.beta0,
        objective,
        deviance,
        null_deviance: prob.null_deviance,
        epochs: state.epoch,
        converged,
        aborted,
        timings: engine.timer.breakdown(),
        seconds: t_start.elapsed().as_secs_f64(),
    };
    Ok(InternalFit { fit, state, final_corr })
}

/// One classical coordinate-descent cycle over `state.active`: gradients are
/// re-derived from the current predictor before every coordinate update.
/// Returns the largest absolute coefficient change.
pub fn cd_epoch(
    d: &Dataset,
    family: &FamilySpec,
    state: &mut SolverState,
    lambda: f64,
    alpha: f64,
) -> Result<f64> {
    run_public_epoch(d, family, state, lambda, alpha, Algorithm::Cd, 1)
}

/// One naive block cycle: within a block every coordinate uses the gradient
/// and curvature frozen at block entry, with no correction. Large blocks at
/// weak penalties can and do diverge; that behavior is intentional.
pub fn bcd_epoch(
    d: &Dataset,
    family: &FamilySpec,
    state: &mut SolverState,
    lambda: f64,
    alpha: f64,
    block_size: usize,
) -> Result<f64> {
    run_public_epoch(d, family, state, lambda, alpha, Algorithm::Bcd, block_size)
}

/// One corrected block cycle (the eccd update) over `state.active`.
pub fn eccd_epoch(
    d: &Dataset,
    family: &FamilySpec,
    state: &mut SolverState,
    lambda: f64,
    alpha: f64,
    block_size: usize,
) -> Result<f64> {
    run_public_epoch(d, family, state, lambda, alpha, Algorithm::Eccd, block_size)
}

fn run_public_epoch(
    d: &Dataset,
    family: &FamilySpec,
    state: &mut SolverState,
    lambda: f64,
    alpha: f64,
    algorithm: Algorithm,
    block_size: usize,
) -> Result<f64> {
    let prob = Problem::new(d, family)?;
    if state.beta.len() != prob.p() || state.z.len() != prob.n() {
        return Err(EccdError::Dimension("state does not match the dataset shape".into()));
    }
    let mut cfg = SolveConfig::new(algorithm, lambda, alpha);
    cfg.block_size = block_size;
    cfg.active_set_cap = false;
    let mut engine = Engine::new(&prob, &cfg);
    engine.set_active_mask(&state.active);
    engine.resync_z(state);
    state.epoch += 1;
    engine.sweep(state)?;
    let max_delta = engine
        .changes
        .iter()
        .map(|&(_, dl)| dl.abs())
        .fold(0.0f64, f64::max);
    Ok(max_delta)
}
