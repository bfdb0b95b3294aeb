//! `path`: fit a full regularization path and print it as CSV (one row per
//! penalty) or, with --json, as a dense coefficient table.

use crate::{source, PathArgs};
use eccd::path::{solve_path, PathConfig, PathResult};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Serialize)]
struct PathReport {
    family: String,
    alpha: f64,
    lambdas: Vec<f64>,
    dev_ratio: Vec<f64>,
    n_active: Vec<usize>,
    beta0: Vec<f64>,
    /// Dense coefficient matrix, one row per penalty.
    beta: Vec<Vec<f64>>,
    stop_reason: Option<String>,
}

pub fn run(a: &PathArgs) -> Result<(), Box<dyn std::error::Error>> {
    let (d, family) = source::load(&a.data)?;
    let grid = source::resolve_grid(
        &d,
        &family,
        a.solve.alpha,
        a.path.as_deref(),
        a.nlambda,
        a.lambda_min_ratio,
    )?;

    let mut cfg = PathConfig::new(a.solve.to_config(0.0));
    cfg.screening = !a.no_screening;
    cfg.warm_start = !a.no_warm_start;
    cfg.early_stop = !a.no_early_stop;
    cfg.ne_limit = a.ne_limit;
    cfg.rsq_max = a.rsq_max;
    cfg.sml = a.sml;

    let res = solve_path(&d, &family, &grid, &cfg)?;
    if let Some(reason) = &res.stop_reason {
        let at = res.stopped_early_at.unwrap_or(res.len());
        eprintln!("path stopped early after {at} of {} penalties: {reason}", grid.k());
    }

    let out = if a.json { render_json(&res, &family, a.solve.alpha)? } else { render_csv(&res) };
    match &a.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }

    let unconverged = res.fits.iter().filter(|f| !f.converged).count();
    if unconverged > 0 {
        return Err(format!(
            "{unconverged} of {} path fits did not converge within {} epochs",
            res.len(),
            cfg.solve.max_epochs
        )
        .into());
    }
    Ok(())
}

/// Columns: lambda, dev_ratio, n_active, then one column per coefficient that
/// is nonzero anywhere on the path (0-based index in the design matrix).
fn render_csv(res: &PathResult) -> String {
    let mut selected: Vec<usize> = Vec::new();
    if let Some(first) = res.fits.first() {
        for j in 0..first.beta.len() {
            if res.fits.iter().any(|f| f.beta[j] != 0.0) {
                selected.push(j);
            }
        }
    }

    let mut out = String::from("lambda,dev_ratio,n_active");
    for &j in &selected {
        write!(out, ",beta_{j}").unwrap();
    }
    out.push('\n');
    for (k, fit) in res.fits.iter().enumerate() {
        let dev_ratio = 1.0 - fit.deviance / fit.null_deviance;
        write!(out, "{},{},{}", res.lambdas[k], dev_ratio, fit.n_nonzero()).unwrap();
        for &j in &selected {
            write!(out, ",{}", fit.beta[j]).unwrap();
        }
        out.push('\n');
    }
    out
}

fn render_json(
    res: &PathResult,
    family: &eccd::FamilySpec,
    alpha: f64,
) -> Result<String, serde_json::Error> {
    let report = PathReport {
        family: family.kind.name().into(),
        alpha,
        lambdas: res.lambdas.clone(),
        dev_ratio: res
            .fits
            .iter()
            .map(|f| 1.0 - f.deviance / f.null_deviance)
            .collect(),
        n_active: res.fits.iter().map(|f| f.n_nonzero()).collect(),
        beta0: res.fits.iter().map(|f| f.beta0).collect(),
        beta: res.fits.iter().map(|f| f.beta.to_vec()).collect(),
        stop_reason: res.stop_reason.clone(),
    };
    serde_json::to_string_pretty(&report).map(|s| s + "\n")
}
