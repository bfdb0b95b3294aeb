//! `profile`: measure how much one gradient refresh costs relative to one
//! plain vector pass and recommend a block size.
//!
//! The block-corrected engine trades one full gradient refresh against s
//! cheap coordinate sweeps, so the break-even block size grows like the
//! square root of the refresh/sweep cost ratio C. Both sides are timed on a
//! length-100k vector, 100 repetitions, medians; the refresh side runs the
//! same batched evaluation the solver itself calls. When either timing sample
//! is too noisy to trust, the recommendation falls back to 8, which stays
//! within a few percent of optimal across the plausible C range.

use crate::{source, ProfileArgs};
use eccd::{Family, FamilySpec};
use ndarray::Array1;
use serde::Serialize;
use std::hint::black_box;
use std::time::Instant;

const VECTOR_LEN: usize = 100_000;
const REPS: usize = 100;
/// Relative (p90 - p10) spread above which a timing sample is considered
/// unstable.
const MAX_SPREAD: f64 = 0.5;

#[derive(Serialize)]
struct ProfileReport {
    family: String,
    /// Median cost of one gradient refresh relative to one vector add.
    c: f64,
    /// round(sqrt(c)) clamped to [1, 32], or 8 when the timer was unstable.
    s_rec: usize,
    stable: bool,
    gradient_seconds: f64,
    add_seconds: f64,
}

pub fn run(a: &ProfileArgs) -> Result<(), Box<dyn std::error::Error>> {
    let family = source::parse_family(&a.family).map_err(eccd::EccdError::Config)?;
    let (grad, add) = time_phases(&family);

    let (grad_med, grad_spread) = median_and_spread(grad);
    let (add_med, add_spread) = median_and_spread(add);
    let c = grad_med / add_med;
    let stable = grad_spread <= MAX_SPREAD && add_spread <= MAX_SPREAD;
    let s_rec = if stable {
        (c.sqrt().round() as usize).clamp(1, 32)
    } else {
        eprintln!(
            "profile: timings too noisy to trust (spread {:.0}% / {:.0}%), \
             falling back to block size 8",
            100.0 * grad_spread,
            100.0 * add_spread
        );
        8
    };

    let report = ProfileReport {
        family: family.kind.name().into(),
        c,
        s_rec,
        stable,
        gradient_seconds: grad_med,
        add_seconds: add_med,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn time_phases(family: &FamilySpec) -> (Vec<f64>, Vec<f64>) {
    // A deterministic ramp across the family's natural-parameter domain; the
    // gamma family is only defined on negative etas.
    let (lo, hi) = match family.kind {
        Family::Gamma => (-5.0, -0.1),
        _ => (-4.0, 4.0),
    };
    let eta = Array1::linspace(lo, hi, VECTOR_LEN);
    let eta_slice = eta.as_slice().expect("linspace is contiguous");
    let addend: Vec<f64> = eta_slice.iter().rev().copied().collect();
    let mut mean = vec![0.0; VECTOR_LEN];
    let mut weight = vec![0.0; VECTOR_LEN];
    let mut sum = vec![0.0; VECTOR_LEN];

    family.mean_weight_into(eta.view(), &mut mean, &mut weight);
    vector_add(eta_slice, &addend, &mut sum);

    let mut grad = Vec::with_capacity(REPS);
    let mut add = Vec::with_capacity(REPS);
    for _ in 0..REPS {
        let t0 = Instant::now();
        family.mean_weight_into(black_box(eta.view()), &mut mean, &mut weight);
        black_box((&mean, &weight));
        grad.push(t0.elapsed().as_secs_f64());

        let t0 = Instant::now();
        vector_add(black_box(eta_slice), black_box(&addend), &mut sum);
        black_box(&sum);
        add.push(t0.elapsed().as_secs_f64());
    }
    (grad, add)
}

fn vector_add(a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = a[i] + b[i];
    }
}

fn median_and_spread(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let median = v[v.len() / 2];
    let p10 = v[v.len() / 10];
    let p90 = v[v.len() * 9 / 10];
    (median, (p90 - p10) / median)
}
