//! `bench`: time every (algorithm, block size, alpha) cell of a sweep and
//! emit one CSV row per cell.
//!
//! Each cell is solved `--reps` times and reports median times. Objective
//! agreement is measured against a block-size-1 reference run of the same
//! penalty schedule: `rel_diff_vs_s1` is the relative L2 distance between the
//! two per-penalty objective vectors and `rel_diff_max` the worst single
//! penalty. A cell whose solve errors out becomes a row with `aborted=true`
//! and NaN numerics rather than killing the sweep, so instability shows up in
//! the table instead of truncating it. Cells run sequentially unless the
//! ECCD_THREADS environment variable raises the worker count.

use crate::{source, BenchArgs};
use eccd::data::Dataset;
use eccd::path::{
    build_path, default_min_ratio, kkt_max_residual, lambda_max, solve_path, LambdaPath,
    PathConfig,
};
use eccd::solvers::{solve_single_lambda, Algorithm, SolveConfig};
use eccd::timing::PhaseBreakdown;
use eccd::FamilySpec;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

enum Mode {
    Single(f64),
    Path(LambdaPath),
}

impl Mode {
    fn label(&self) -> String {
        match self {
            Mode::Single(l) => format!("{l}"),
            Mode::Path(grid) => format!("path-{}@{}", grid.k(), grid.min_ratio),
        }
    }
}

struct Cell {
    algorithm: Algorithm,
    s: usize,
    alpha_idx: usize,
}

struct Outcome {
    seconds: f64,
    epochs: usize,
    objectives: Vec<f64>,
    final_objective: f64,
    kkt: f64,
    converged: bool,
    aborted: bool,
    phases: PhaseBreakdown,
}

struct Row {
    algorithm: &'static str,
    s: usize,
    alpha: f64,
    label: String,
    time_seconds: f64,
    epochs: usize,
    objective: f64,
    rel_diff_vs_s1: f64,
    rel_diff_max: f64,
    kkt_max_residual: f64,
    converged: bool,
    aborted: bool,
    phases: PhaseBreakdown,
}

pub fn run(a: &BenchArgs) -> Result<(), Box<dyn std::error::Error>> {
    let (d, family) = source::load(&a.data)?;
    let algorithms: Vec<Algorithm> = a
        .algorithms
        .split(',')
        .map(|s| Algorithm::parse(s.trim()).expect("validated before dispatch"))
        .collect();
    let s_list = crate::parse_usize_list(&a.s_list, "--s-list").expect("validated");
    let alphas = crate::parse_f64_list(&a.alpha_list, "--alpha-list").expect("validated");

    // One penalty schedule and one block-size-1 reference objective vector
    // per alpha; every cell of that alpha is scored against them.
    let mut modes: Vec<eccd::Result<Mode>> = Vec::new();
    for &alpha in &alphas {
        modes.push(resolve_mode(&d, &family, a, alpha));
    }
    let mut references: Vec<Option<Vec<f64>>> = Vec::new();
    for (i, rm) in modes.iter().enumerate() {
        let reference = match rm {
            Ok(mode) => {
                match run_once(&d, &family, a, Algorithm::Eccd, 1, alphas[i], mode, false) {
                    Ok(out) => Some(out.objectives),
                    Err(e) => {
                        eprintln!("bench: reference run for alpha={} failed: {e}", alphas[i]);
                        None
                    }
                }
            }
            Err(e) => {
                eprintln!("bench: penalty schedule for alpha={} failed: {e}", alphas[i]);
                None
            }
        };
        references.push(reference);
    }

    let mut cells = Vec::new();
    for &algorithm in &algorithms {
        for &s in &s_list {
            for alpha_idx in 0..alphas.len() {
                cells.push(Cell { algorithm, s, alpha_idx });
            }
        }
    }

    let threads = std::env::var("ECCD_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
        .min(cells.len().max(1));

    let run_cell = |cell: &Cell| -> Row {
        let alpha = alphas[cell.alpha_idx];
        match &modes[cell.alpha_idx] {
            Ok(mode) => bench_cell(
                &d,
                &family,
                a,
                cell,
                alpha,
                mode,
                references[cell.alpha_idx].as_deref(),
            ),
            Err(_) => error_row(cell, alpha, "unavailable".into()),
        }
    };

    let rows: Vec<Row> = if threads <= 1 {
        cells.iter().map(run_cell).collect()
    } else {
        let next = AtomicUsize::new(0);
        let collected: Mutex<Vec<(usize, Row)>> = Mutex::new(Vec::with_capacity(cells.len()));
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= cells.len() {
                        break;
                    }
                    let row = run_cell(&cells[i]);
                    collected.lock().unwrap().push((i, row));
                });
            }
        });
        let mut collected = collected.into_inner().unwrap();
        collected.sort_by_key(|(i, _)| *i);
        collected.into_iter().map(|(_, row)| row).collect()
    };

    let csv = render_csv(&rows, a.timings);
    match &a.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn resolve_mode(
    d: &Dataset,
    family: &FamilySpec,
    a: &BenchArgs,
    alpha: f64,
) -> eccd::Result<Mode> {
    if let Some(l) = a.lambda {
        return Ok(Mode::Single(l));
    }
    let lmax = lambda_max(d, family, alpha)?;
    let ratio = a
        .lambda_min_ratio
        .unwrap_or_else(|| default_min_ratio(d.n(), d.p()));
    Ok(Mode::Path(build_path(lmax, a.nlambda, ratio)?))
}

/// Solve one cell once. Paths always run the full grid so objective vectors
/// from different block sizes stay comparable entry by entry.
#[allow(clippy::too_many_arguments)]
fn run_once(
    d: &Dataset,
    family: &FamilySpec,
    a: &BenchArgs,
    algorithm: Algorithm,
    s: usize,
    alpha: f64,
    mode: &Mode,
    timings: bool,
) -> eccd::Result<Outcome> {
    let mut solve = SolveConfig::new(algorithm, 0.0, alpha);
    solve.block_size = s;
    solve.tol = a.tol;
    solve.max_epochs = a.max_epochs;
    solve.fit_intercept = !a.no_intercept;
    solve.active_set_cap = !a.no_active_cap;
    solve.timings = timings;

    match mode {
        Mode::Single(l) => {
            solve.lambda = *l;
            let t = Instant::now();
            let fit = solve_single_lambda(d, family, &solve, None)?;
            let seconds = t.elapsed().as_secs_f64();
            let kkt = kkt_max_residual(d, family, fit.beta.view(), fit.beta0, *l, alpha)
                .unwrap_or(f64::NAN);
            Ok(Outcome {
                seconds,
                epochs: fit.epochs,
                objectives: vec![fit.objective],
                final_objective: fit.objective,
                kkt,
                converged: fit.converged,
                aborted: fit.aborted,
                phases: fit.timings,
            })
        }
        Mode::Path(grid) => {
            let mut cfg = PathConfig::new(solve);
            cfg.screening = !a.no_screening;
            cfg.warm_start = !a.no_warm_start;
            cfg.early_stop = false;
            let t = Instant::now();
            let res = solve_path(d, family, grid, &cfg)?;
            let seconds = t.elapsed().as_secs_f64();
            let mut phases = PhaseBreakdown::default();
            let mut kkt = 0.0f64;
            for (k, fit) in res.fits.iter().enumerate() {
                phases.add(&fit.timings);
                let r = kkt_max_residual(
                    d,
                    family,
                    fit.beta.view(),
                    fit.beta0,
                    res.lambdas[k],
                    alpha,
                )
                .unwrap_or(f64::NAN);
                kkt = if r.is_nan() { f64::NAN } else { kkt.max(r) };
            }
            Ok(Outcome {
                seconds,
                epochs: res.fits.iter().map(|f| f.epochs).sum(),
                objectives: res.fits.iter().map(|f| f.objective).collect(),
                final_objective: res.fits.last().map_or(f64::NAN, |f| f.objective),
                kkt,
                converged: res.fits.iter().all(|f| f.converged),
                aborted: res.fits.iter().any(|f| f.aborted),
                phases,
            })
        }
    }
}

fn bench_cell(
    d: &Dataset,
    family: &FamilySpec,
    a: &BenchArgs,
    cell: &Cell,
    alpha: f64,
    mode: &Mode,
    reference: Option<&[f64]>,
) -> Row {
    let mut outcomes = Vec::with_capacity(a.reps);
    for _ in 0..a.reps {
        match run_once(d, family, a, cell.algorithm, cell.s, alpha, mode, a.timings) {
            Ok(out) => outcomes.push(out),
            Err(e) => {
                eprintln!(
                    "bench: cell algorithm={} s={} alpha={alpha} failed: {e}",
                    cell.algorithm.name(),
                    cell.s
                );
                return error_row(cell, alpha, mode.label());
            }
        }
    }

    let time_seconds = median(outcomes.iter().map(|o| o.seconds));
    let phases = PhaseBreakdown {
        gradient_eval: median(outcomes.iter().map(|o| o.phases.gradient_eval)),
        block_build: median(outcomes.iter().map(|o| o.phases.block_build)),
        coef_update: median(outcomes.iter().map(|o| o.phases.coef_update)),
        screening: median(outcomes.iter().map(|o| o.phases.screening)),
        convergence_check: median(outcomes.iter().map(|o| o.phases.convergence_check)),
    };
    // Solves are deterministic, so every rep produced the same numbers; only
    // the timings differ.
    let out = outcomes.pop().expect("reps >= 1");
    let (rel_l2, rel_max) = match reference {
        Some(r) => rel_diffs(&out.objectives, r),
        None => (f64::NAN, f64::NAN),
    };
    Row {
        algorithm: cell.algorithm.name(),
        s: cell.s,
        alpha,
        label: mode.label(),
        time_seconds,
        epochs: out.epochs,
        objective: out.final_objective,
        rel_diff_vs_s1: rel_l2,
        rel_diff_max: rel_max,
        kkt_max_residual: out.kkt,
        converged: out.converged,
        aborted: out.aborted,
        phases,
    }
}

fn error_row(cell: &Cell, alpha: f64, label: String) -> Row {
    Row {
        algorithm: cell.algorithm.name(),
        s: cell.s,
        alpha,
        label,
        time_seconds: f64::NAN,
        epochs: 0,
        objective: f64::NAN,
        rel_diff_vs_s1: f64::NAN,
        rel_diff_max: f64::NAN,
        kkt_max_residual: f64::NAN,
        converged: false,
        aborted: true,
        phases: PhaseBreakdown::default(),
    }
}

/// Relative L2 distance between objective vectors, plus the worst per-entry
/// relative difference.
fn rel_diffs(obj: &[f64], reference: &[f64]) -> (f64, f64) {
    if obj.len() != reference.len() || reference.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut worst = 0.0f64;
    for (&o, &r) in obj.iter().zip(reference) {
        num += (o - r) * (o - r);
        den += r * r;
        worst = worst.max((o - r).abs() / r.abs().max(1e-300));
    }
    if den == 0.0 {
        return (f64::NAN, worst);
    }
    ((num / den).sqrt(), worst)
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

fn render_csv(rows: &[Row], timings: bool) -> String {
    let mut out = String::from(
        "algorithm,s,alpha,lambda_or_path,time_seconds,epochs,objective,\
         rel_diff_vs_s1,rel_diff_max,kkt_max_residual,converged,aborted",
    );
    if timings {
        out.push_str(
            ",t_gradient_eval,t_block_build,t_coef_update,t_screening,t_convergence_check",
        );
    }
    out.push('\n');
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.s,
            r.alpha,
            r.label,
            r.time_seconds,
            r.epochs,
            r.objective,
            r.rel_diff_vs_s1,
            r.rel_diff_max,
            r.kkt_max_residual,
            r.converged,
            r.aborted
        )
        .unwrap();
        if timings {
            write!(
                out,
                ",{},{},{},{},{}",
                r.phases.gradient_eval,
                r.phases.block_build,
                r.phases.coef_update,
                r.phases.screening,
                r.phases.convergence_check
            )
            .unwrap();
        }
        out.push('\n');
    }
    out
}
