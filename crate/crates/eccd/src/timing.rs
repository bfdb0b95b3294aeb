//! Coarse phase accounting for the solver loop.
//!
//! Timings answer "where do the seconds go" at the granularity of the five
//! phases a fit cycles through; they are collected per block or per scan, not
//! per coordinate, so the instrumentation itself stays out of the hot loop.

use std::time::Instant;

/// The five cost centers of a coordinate-descent fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Refreshing F'(eta) and F''(eta) after the linear predictor moved.
    GradientEval,
    /// Building per-block gradient and curvature quantities.
    BlockBuild,
    /// The scalar soft-threshold updates and linear-predictor maintenance.
    CoefUpdate,
    /// Strong-rule screening and KKT violation scans.
    Screening,
    /// Deviance-based convergence checks.
    ConvergenceCheck,
}

/// Accumulated seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseBreakdown {
    pub gradient_eval: f64,
    pub block_build: f64,
    pub coef_update: f64,
    pub screening: f64,
    pub convergence_check: f64,
}

impl PhaseBreakdown {
    pub fn total(&self) -> f64 {
        self.gradient_eval
            + self.block_build
            + self.coef_update
            + self.screening
            + self.convergence_check
    }

    pub fn add(&mut self, other: &PhaseBreakdown) {
        self.gradient_eval += other.gradient_eval;
        self.block_build += other.block_build;
        self.coef_update += other.coef_update;
        self.screening += other.screening;
        self.convergence_check += other.convergence_check;
    }
}

/// Accumulates wall time per phase; a disabled timer costs one branch.
#[derive(Debug)]
pub struct PhaseTimer {
    enabled: bool,
    acc: PhaseBreakdown,
}

impl PhaseTimer {
    pub fn new(enabled: bool) -> Self {
        PhaseTimer { enabled, acc: PhaseBreakdown::default() }
    }

    /// Start/finish pair for call sites where a closure would fight the
    /// borrow checker. `begin` returns None when timing is disabled.
    pub fn begin(&self) -> Option<Instant> {
        if self.enabled {
            Some(Instant::now())
        } else {
            None
        }
    }

    pub fn end(&mut self, phase: Phase, started: Option<Instant>) {
        let Some(t0) = started else { return };
        let secs = t0.elapsed().as_secs_f64();
        let slot = match phase {
            Phase::GradientEval => &mut self.acc.gradient_eval,
            Phase::BlockBuild => &mut self.acc.block_build,
            Phase::CoefUpdate => &mut self.acc.coef_update,
            Phase::Screening => &mut self.acc.screening,
            Phase::ConvergenceCheck => &mut self.acc.convergence_check,
        };
        *slot += secs;
    }

    pub fn time<T>(&mut self, phase: Phase, f: impl FnOnce() -> T) -> T {
        if !self.enabled {
            return f();
        }
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        let slot = match phase {
            Phase::GradientEval => &mut self.acc.gradient_eval,
            Phase::BlockBuild => &mut self.acc.block_build,
            Phase::CoefUpdate => &mut self.acc.coef_update,
            Phase::Screening => &mut self.acc.screening,
            Phase::ConvergenceCheck => &mut self.acc.convergence_check,
        };
        *slot += secs;
        out
    }

    pub fn breakdown(&self) -> PhaseBreakdown {
        self.acc
    }
}
