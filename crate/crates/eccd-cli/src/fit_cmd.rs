//! `fit`: solve one penalty value and report the solution as JSON.

use crate::{source, FitArgs};
use eccd::oracle::{prox_grad_solve, OracleConfig};
use eccd::path::kkt_max_residual;
use eccd::solvers::solve_single_lambda;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Serialize)]
struct FitReport {
    family: String,
    algorithm: String,
    block_size: usize,
    lambda: f64,
    alpha: f64,
    beta0: f64,
    /// Nonzero coefficients keyed by 0-based column index.
    beta: BTreeMap<usize, f64>,
    n_nonzero: usize,
    objective: f64,
    deviance: f64,
    null_deviance: f64,
    kkt_max_residual: f64,
    epochs: usize,
    converged: bool,
    aborted: bool,
    seconds: f64,
}

pub fn run(a: &FitArgs) -> Result<(), Box<dyn std::error::Error>> {
    let (d, family) = source::load(&a.data)?;
    let cfg = a.solve.to_config(a.lambda);
    let fit = solve_single_lambda(&d, &family, &cfg, None)?;

    let beta: BTreeMap<usize, f64> = fit
        .beta
        .iter()
        .enumerate()
        .filter(|&(_, &b)| b != 0.0)
        .map(|(j, &b)| (j, b))
        .collect();
    let report = FitReport {
        family: family.kind.name().into(),
        algorithm: cfg.algorithm.name().into(),
        block_size: cfg.block_size,
        lambda: a.lambda,
        alpha: cfg.alpha,
        beta0: fit.beta0,
        n_nonzero: beta.len(),
        beta,
        objective: fit.objective,
        deviance: fit.deviance,
        null_deviance: fit.null_deviance,
        kkt_max_residual: kkt_max_residual(
            &d,
            &family,
            fit.beta.view(),
            fit.beta0,
            a.lambda,
            cfg.alpha,
        )?,
        epochs: fit.epochs,
        converged: fit.converged,
        aborted: fit.aborted,
        seconds: fit.seconds,
    };
    let json = serde_json::to_string_pretty(&report)?;
    match &a.out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }

    if a.verify {
        let oracle = prox_grad_solve(&d, &family, a.lambda, cfg.alpha, &OracleConfig::default())?;
        let rel = (fit.objective - oracle.objective).abs() / oracle.objective.abs().max(1.0);
        eprintln!(
            "verify: objective {:.12e} vs proximal-gradient reference {:.12e} (rel {rel:.3e})",
            fit.objective, oracle.objective
        );
        if fit.objective < oracle.objective - 1e-9 {
            return Err(format!(
                "verification failed: solver objective {} undercuts the reference {}",
                fit.objective, oracle.objective
            )
            .into());
        }
        if rel > 1e-6 {
            return Err(format!(
                "verification failed: objectives disagree by a relative {rel:.3e} (limit 1e-6)"
            )
            .into());
        }
    }

    if fit.aborted {
        return Err("fit aborted: the objective exceeded the runaway guard".into());
    }
    if !fit.converged {
        return Err(format!("fit did not converge within {} epochs", cfg.max_epochs).into());
    }
    Ok(())
}
