//! End-to-end acceptance suite: equivalence, correctness, and stability
//! checks for the three coordinate engines, the screening/path machinery,
//! and the reference oracles. Each numbered criterion prints exactly one
//! PASS/FAIL line (the timing check may print WARN instead of FAIL); the
//! suite fails if any hard criterion fails. Criteria whose solutions feed
//! correctness checks run at tightened tolerances (see CERT_TOL and
//! STUDY_TOL) so their KKT residuals are certified at the 1e-6 scale; the
//! timing criterion runs at the default tolerance and is excluded from
//! certification.

use eccd::data::{generate_synthetic, Dataset, SyntheticConfig};
use eccd::error::EccdError;
use eccd::families::{Family, FamilySpec};
use eccd::oracle::{micro_grid_solve, prox_grad_solve, OracleConfig};
use eccd::path::{build_path, kkt_max_residual, lambda_max, null_deviance, solve_path, PathConfig};
use eccd::solvers::{
    solve_single_lambda, solve_single_lambda_observed, Algorithm, FitResult, SolveConfig,
};
use ndarray::{array, Array1};
use std::time::Instant;

/// Tolerance for every fit whose solution feeds a correctness check. Two of
/// the bars below are absolute and tight: per-coordinate stationarity must
/// reach 1e-6 and screened-vs-unscreened objectives must agree to 1e-8. The
/// stopping rule is relative to the null deviance and loosened by the block
/// size, so the stationarity error it leaves behind scales like
/// sqrt(tol * dev0 * s * max_j sum_i w_i x_ij^2) / n; on unit-scale instances
/// with s up to 32 that reaches the 1e-6 bar only around tol = 1e-14.
const CERT_TOL: f64 = 1e-14;

/// The correlated wide study instance needs two extra decades: a change-based
/// stopping rule bounds the step, and near-tied correlated columns contract
/// slowly, so the remaining gradient is the step divided by roughly one minus
/// the contraction rate (measured near 10x there).
const STUDY_TOL: f64 = 1e-16;

fn instance(n: usize, p: usize, rho: f64, s_true: usize, family: Family, seed: u64) -> Dataset {
    let cfg = SyntheticConfig::new(n, p, rho, s_true, family, seed);
    generate_synthetic(&cfg)
        .expect("synthetic generation")
        .standardize()
        .expect("standardization")
}

/// Like `instance` but with a tempered signal so that count and continuous
/// responses stay at unit scale; the absolute residual and agreement bars in
/// this suite are calibrated for unit-scale data.
fn tame_instance(
    n: usize,
    p: usize,
    rho: f64,
    s_true: usize,
    family: Family,
    seed: u64,
) -> Dataset {
    let mut cfg = SyntheticConfig::new(n, p, rho, s_true, family, seed);
    cfg.signal_range = (0.3, 0.6);
    generate_synthetic(&cfg)
        .expect("synthetic generation")
        .standardize()
        .expect("standardization")
}

fn certified_config(algorithm: Algorithm, block_size: usize, lambda: f64, alpha: f64) -> SolveConfig {
    let mut cfg = SolveConfig::new(algorithm, lambda, alpha);
    cfg.block_size = block_size;
    cfg.tol = CERT_TOL;
    cfg
}

/// Accumulates the worst KKT stationarity residual over every converged fit
/// submitted by the correctness criteria, tracked per submitting criterion.
struct Certifier {
    max_residual: f64,
    fits: usize,
    skipped_unconverged: usize,
    worst: String,
    per_tag: Vec<(&'static str, f64, usize)>,
}

impl Certifier {
    fn new() -> Self {
        Certifier {
            max_residual: 0.0,
            fits: 0,
            skipped_unconverged: 0,
            worst: String::new(),
            per_tag: Vec::new(),
        }
    }

    fn certify(
        &mut self,
        tag: &'static str,
        d: &Dataset,
        family: &FamilySpec,
        fit: &FitResult,
        lambda: f64,
        alpha: f64,
    ) {
        if !fit.converged {
            self.skipped_unconverged += 1;
            return;
        }
        let r = kkt_max_residual(d, family, fit.beta.view(), fit.beta0, lambda, alpha)
            .expect("residual evaluation");
        self.fits += 1;
        if r > self.max_residual {
            self.max_residual = r;
            self.worst = format!("{tag} lambda={lambda:.4e} alpha={alpha}");
        }
        match self.per_tag.iter_mut().find(|(t, _, _)| *t == tag) {
            Some(entry) => {
                entry.1 = entry.1.max(r);
                entry.2 += 1;
            }
            None => self.per_tag.push((tag, r, 1)),
        }
    }

    fn breakdown(&self) -> String {
        self.per_tag
            .iter()
            .map(|(t, r, c)| format!("{t} {r:.1e} over {c}"))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

struct Tally {
    failures: Vec<String>,
}

impl Tally {
    fn record(&mut self, idx: usize, name: &str, pass: bool, detail: &str, secs: f64, budget: Option<f64>) {
        let within = budget.map_or(true, |b| secs < b);
        let ok = pass && within;
        let budget_note = match budget {
            Some(b) => format!("{secs:.1}s of {b:.0}s budget"),
            None => format!("{secs:.1}s"),
        };
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("criterion {idx:02} [{verdict}] {name}: {detail} ({budget_note})");
        if !ok {
            self.failures.push(format!("criterion {idx} ({name})"));
        }
    }

    fn warn_only(&mut self, idx: usize, name: &str, pass: bool, detail: &str, secs: f64) {
        let verdict = if pass { "PASS" } else { "WARN" };
        println!("criterion {idx:02} [{verdict}] {name}: {detail} ({secs:.1}s)");
    }
}

/// Epoch-by-epoch iterates of one solve.
fn iterate_trace(
    d: &Dataset,
    family: &FamilySpec,
    cfg: &SolveConfig,
) -> (Vec<Array1<f64>>, Vec<f64>, FitResult) {
    let mut betas = Vec::new();
    let mut beta0s = Vec::new();
    let fit = solve_single_lambda_observed(d, family, cfg, None, &mut |state| {
        betas.push(state.beta.clone());
        beta0s.push(state.beta0);
    })
    .expect("solve");
    (betas, beta0s, fit)
}

fn small_grid(i: usize) -> (usize, usize, Family, f64, u64) {
    let n = 10 + (i * 13) % 51;
    let p = 10 + (i * 19 + 7) % 51;
    let family = if i % 2 == 0 { Family::Bernoulli } else { Family::Poisson };
    let alpha = [0.1, 0.5, 1.0][i % 3];
    (n, p, family, alpha, 1000 + i as u64)
}

fn criterion_1_cd_equivalence() -> (bool, String) {
    let mut checked = 0;
    for i in 0..25 {
        let (n, p, family, alpha, seed) = small_grid(i);
        let d = instance(n, p, 0.3, p.min(4), family, seed);
        let fam = FamilySpec::new(family);
        let lambda = 0.3 * lambda_max(&d, &fam, alpha).expect("lambda_max");
        let cd = certified_config(Algorithm::Cd, 1, lambda, alpha);
        let ec = certified_config(Algorithm::Eccd, 1, lambda, alpha);
        let (betas_cd, b0_cd, fit_cd) = iterate_trace(&d, &fam, &cd);
        let (betas_ec, b0_ec, fit_ec) = iterate_trace(&d, &fam, &ec);
        if betas_cd.len() != betas_ec.len() || b0_cd != b0_ec || fit_cd.epochs != fit_ec.epochs {
            return (false, format!("instance {i}: epoch traces differ in shape"));
        }
        for (e, (a, b)) in betas_cd.iter().zip(betas_ec.iter()).enumerate() {
            if a != b {
                return (false, format!("instance {i}: beta sequences differ at epoch {e}"));
            }
        }
        checked += 1;
    }
    (true, format!("{checked}/25 instances bitwise-identical beta sequences at s=1"))
}

fn criterion_2_gaussian_exactness() -> (bool, String) {
    // With a quadratic cumulant the in-block correction reproduces the fully
    // refreshed gradient exactly in real arithmetic; in floating point the
    // two evaluation orders differ by rounding, so per-epoch agreement is
    // pinned at 1e-12 per coordinate rather than bitwise. The per-coordinate
    // stopping threshold scales with the block size, so the blocked run may
    // stop a few epochs before the unit run; iterates are compared on the
    // shared prefix and the final solutions must agree to 1e-10 relative.
    const TOL: f64 = 1e-12;
    let mut worst = 0.0f64;
    let mut worst_final = 0.0f64;
    for i in 0..25 {
        let (n, p, _, alpha, seed) = small_grid(i);
        let d = instance(n, p, 0.3, p.min(4), Family::Gaussian, seed);
        let fam = FamilySpec::new(Family::Gaussian);
        let lambda = 0.3 * lambda_max(&d, &fam, alpha).expect("lambda_max");
        let base = certified_config(Algorithm::Eccd, 1, lambda, alpha);
        let (betas_1, b0_1, fit_1) = iterate_trace(&d, &fam, &base);
        for s in [2usize, 4, 8, 16] {
            let cfg = certified_config(Algorithm::Eccd, s, lambda, alpha);
            let (betas_s, b0_s, fit_s) = iterate_trace(&d, &fam, &cfg);
            for (e, (a, b)) in betas_1.iter().zip(betas_s.iter()).enumerate() {
                let mut diff = (b0_1[e] - b0_s[e]).abs();
                for j in 0..p {
                    diff = diff.max((a[j] - b[j]).abs());
                }
                worst = worst.max(diff);
                if diff > TOL {
                    return (
                        false,
                        format!("instance {i} s={s} epoch {e}: iterate diff {diff:.2e} > {TOL:.0e}"),
                    );
                }
            }
            let rel = (fit_s.objective - fit_1.objective).abs() / fit_1.objective.abs();
            worst_final = worst_final.max(rel);
            if rel > 1e-10 {
                return (false, format!("instance {i} s={s}: final objective rel diff {rel:.2e}"));
            }
        }
    }
    (
        true,
        format!(
            "s in {{2,4,8,16}} matches s=1: worst shared-epoch coordinate diff {worst:.1e} (pinned 1e-12), worst final objective rel diff {worst_final:.1e}"
        ),
    )
}

struct PathStudy {
    dataset: Dataset,
    family: FamilySpec,
}

fn criterion_3_path_agreement(
    study: &PathStudy,
    cert: &mut Certifier,
    deviance_paths: &mut Vec<Vec<f64>>,
) -> (bool, String) {
    let fam = &study.family;
    let d = &study.dataset;
    let mut worst: f64 = 0.0;
    for &alpha in &[0.1, 0.2, 0.5, 0.8, 1.0] {
        let lmax = lambda_max(d, fam, alpha).expect("lambda_max");
        let grid = build_path(lmax, 100, 0.01).expect("grid");
        let reference: Vec<f64>;
        {
            let mut cfg = PathConfig::new(certified_config(Algorithm::Eccd, 1, 0.0, alpha));
            cfg.solve.tol = STUDY_TOL;
            cfg.early_stop = false;
            let res = solve_path(d, fam, &grid, &cfg).expect("path");
            assert_eq!(res.len(), 100, "reference path truncated");
            for (lam, fit) in res.lambdas.iter().zip(res.fits.iter()) {
                cert.certify("path-agreement", d, fam, fit, *lam, alpha);
            }
            deviance_paths.push(res.fits.iter().map(|f| f.deviance).collect());
            reference = res.fits.iter().map(|f| f.objective).collect();
        }
        let ref_norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
        for &s in &[2usize, 4, 8, 16, 32] {
            let mut cfg = PathConfig::new(certified_config(Algorithm::Eccd, s, 0.0, alpha));
            cfg.solve.tol = STUDY_TOL;
            cfg.early_stop = false;
            let res = solve_path(d, fam, &grid, &cfg).expect("path");
            if res.len() != 100 {
                return (false, format!("alpha={alpha} s={s}: path truncated to {}", res.len()));
            }
            for (lam, fit) in res.lambdas.iter().zip(res.fits.iter()) {
                cert.certify("path-agreement", d, fam, fit, *lam, alpha);
            }
            deviance_paths.push(res.fits.iter().map(|f| f.deviance).collect());
            let diff: f64 = res
                .fits
                .iter()
                .zip(reference.iter())
                .map(|(f, r)| (f.objective - r) * (f.objective - r))
                .sum::<f64>()
                .sqrt();
            let delta = diff / ref_norm;
            worst = worst.max(delta);
            if delta >= 1e-5 {
                return (false, format!("alpha={alpha} s={s}: path objective delta {delta:.2e} >= 1e-5"));
            }
        }
    }
    (true, format!("5 alphas x 5 block sizes, worst path objective delta {worst:.1e} < 1e-5"))
}

fn criterion_4_bcd_instability(study: &PathStudy, cert: &mut Certifier) -> (bool, String) {
    let d = &study.dataset;
    let fam = &study.family;
    // Pure lasso: without a ridge term the frozen within-block curvature has
    // no floor, which is where stale blocks are at their most fragile.
    let alpha = 1.0;
    let lmax = lambda_max(d, fam, alpha).expect("lambda_max");
    let ratios = [0.1, 0.01, 0.001];

    let mut reference = Vec::new();
    for &r in &ratios {
        let cfg = certified_config(Algorithm::Eccd, 1, r * lmax, alpha);
        let fit = solve_single_lambda(d, fam, &cfg, None).expect("solve");
        if !fit.converged {
            return (false, format!("reference s=1 fit did not converge at ratio {r}"));
        }
        cert.certify("bcd-study", d, fam, &fit, r * lmax, alpha);
        reference.push(fit.objective);
    }

    let mut eccd_worst: f64 = 0.0;
    for &s in &[8usize, 16, 32] {
        for (ri, &r) in ratios.iter().enumerate() {
            let cfg = certified_config(Algorithm::Eccd, s, r * lmax, alpha);
            let fit = solve_single_lambda(d, fam, &cfg, None).expect("solve");
            if !fit.converged || fit.aborted {
                return (false, format!("corrected engine unstable at s={s}, ratio {r}"));
            }
            cert.certify("bcd-study", d, fam, &fit, r * lmax, alpha);
            let rel = (fit.objective - reference[ri]).abs() / reference[ri].abs();
            eccd_worst = eccd_worst.max(rel);
            if rel >= 1e-5 {
                return (false, format!("corrected engine rel diff {rel:.2e} at s={s}, ratio {r}"));
            }
        }
    }

    let mut exploded = 0;
    let mut detail_bcd = String::new();
    for &s in &[8usize, 16, 32] {
        for (ri, &r) in ratios[1..].iter().enumerate() {
            let mut cfg = certified_config(Algorithm::Bcd, s, r * lmax, alpha);
            cfg.max_epochs = 2000;
            match solve_single_lambda(d, fam, &cfg, None) {
                Ok(fit) => {
                    let rel = (fit.objective - reference[ri + 1]).abs() / reference[ri + 1].abs();
                    if fit.aborted || rel >= 1e3 {
                        exploded += 1;
                    } else {
                        detail_bcd =
                            format!("stale blocks stayed tame at s={s}, ratio {r} (rel {rel:.2e})");
                    }
                }
                // A numerically destroyed state is the divergence this
                // criterion is probing for.
                Err(EccdError::Saturation(_)) | Err(EccdError::Numerical(_)) => exploded += 1,
                Err(e) => return (false, format!("unexpected error at s={s}, ratio {r}: {e}")),
            }
        }
    }
    if exploded != 6 {
        return (false, format!("only {exploded}/6 naive-block cells exploded; {detail_bcd}"));
    }
    (
        true,
        format!(
            "corrected blocks worst rel diff {eccd_worst:.1e} < 1e-5; all 6 naive-block cells exploded or aborted"
        ),
    )
}

fn criterion_5_oracle_equivalence(cert: &mut Certifier) -> (bool, String) {
    let oracle_cfg = OracleConfig { tol: 1e-12, max_iters: 400_000, ..Default::default() };
    let mut worst_obj: f64 = 0.0;
    let mut worst_coef: f64 = 0.0;
    let mut micro_checked = 0;
    for i in 0..20 {
        let p = if i < 6 { 1 + i % 2 } else { 5 + (i * 7) % 56 };
        let n = 20 + (i * 11) % 41;
        let family = [Family::Bernoulli, Family::Poisson, Family::Gaussian][i % 3];
        let alpha = [0.25, 0.6, 1.0][i % 3];
        let d = if family == Family::Poisson {
            tame_instance(n, p, 0.2, p.min(2), family, 2000 + i as u64)
        } else {
            instance(n, p, 0.2, p.min(3), family, 2000 + i as u64)
        };
        let fam = FamilySpec::new(family);
        let lambda = 0.2 * lambda_max(&d, &fam, alpha).expect("lambda_max");

        let cfg = certified_config(Algorithm::Eccd, 8, lambda, alpha);
        let fit = solve_single_lambda(&d, &fam, &cfg, None).expect("solve");
        if !fit.converged {
            return (false, format!("instance {i}: solver did not converge"));
        }
        cert.certify("oracle-equivalence", &d, &fam, &fit, lambda, alpha);

        let oracle = prox_grad_solve(&d, &fam, lambda, alpha, &oracle_cfg).expect("oracle");
        if oracle.objective > fit.objective + 1e-9 {
            return (
                false,
                format!("instance {i}: oracle objective {:.12} above solver {:.12}", oracle.objective, fit.objective),
            );
        }
        let rel = (fit.objective - oracle.objective).abs() / oracle.objective.abs().max(1e-12);
        worst_obj = worst_obj.max(rel);
        if rel >= 1e-6 {
            return (false, format!("instance {i}: objective rel diff {rel:.2e} >= 1e-6"));
        }

        if p <= 2 {
            let grid = micro_grid_solve(&d, &fam, lambda, alpha, 1e-5).expect("grid oracle");
            for j in 0..p {
                let diff = (fit.beta[j] - grid.beta[j]).abs();
                worst_coef = worst_coef.max(diff);
                if diff >= 1e-4 {
                    return (false, format!("instance {i}: coefficient {j} off grid oracle by {diff:.2e}"));
                }
            }
            micro_checked += 1;
        }
    }
    (
        true,
        format!(
            "20 instances: worst objective rel diff {worst_obj:.1e} < 1e-6; {micro_checked} grid-checked fits within 1e-4"
        ),
    )
}

fn criterion_6_kkt(cert: &Certifier) -> (bool, String) {
    let pass = cert.max_residual <= 1e-6 && cert.fits > 0;
    (
        pass,
        format!(
            "{} converged fits certified, max stationarity residual {:.2e} <= 1e-6 (worst: {}; {})",
            cert.fits,
            cert.max_residual,
            cert.worst,
            cert.breakdown()
        ),
    )
}

fn criterion_7_screening_safety(
    cert: &mut Certifier,
    deviance_paths: &mut Vec<Vec<f64>>,
) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let (n, p) = if i % 2 == 0 { (50, 200) } else { (100, 40) };
        let family = [Family::Bernoulli, Family::Bernoulli, Family::Poisson, Family::Gaussian][i % 4];
        let alpha = [0.3, 0.7, 1.0][i % 3];
        // Correlated columns make the sum of the true signal load onto the
        // shared factor, so count and continuous responses need both a small
        // per-coefficient signal and a small support to stay at unit scale.
        let s_true = if family == Family::Bernoulli { 8 } else { 4 };
        let d = tame_instance(n, p, 0.25, s_true, family, 3000 + i as u64);
        let fam = FamilySpec::new(family);
        let lmax = lambda_max(&d, &fam, alpha).expect("lambda_max");
        let grid = build_path(lmax, 50, 0.05).expect("grid");

        let mut cfg_on = PathConfig::new(certified_config(Algorithm::Eccd, 8, 0.0, alpha));
        // The two arms take different floating-point routes to the optimum,
        // and the 1e-8 bar leaves no room for stopping scatter on slowly
        // contracting instances; one extra decade buys the margin.
        cfg_on.solve.tol = 1e-15;
        cfg_on.early_stop = false;
        let mut cfg_off = cfg_on.clone();
        cfg_off.screening = false;

        let on = solve_path(&d, &fam, &grid, &cfg_on).expect("path");
        let off = solve_path(&d, &fam, &grid, &cfg_off).expect("path");
        for (lam, fit) in on.lambdas.iter().zip(on.fits.iter()) {
            cert.certify("screening-safety", &d, &fam, fit, *lam, alpha);
        }
        deviance_paths.push(on.fits.iter().map(|f| f.deviance).collect());
        for (k, (a, b)) in on.fits.iter().zip(off.fits.iter()).enumerate() {
            let rel = (a.objective - b.objective).abs() / b.objective.abs().max(1e-300);
            worst = worst.max(rel);
            if rel >= 1e-8 {
                return (
                    false,
                    format!("instance {i} grid point {k}: screened vs unscreened rel diff {rel:.2e}"),
                );
            }
        }
    }
    (true, format!("10 instances, worst screened-vs-unscreened objective rel diff {worst:.1e} < 1e-8"))
}

fn criterion_8_warm_start(
    cert: &mut Certifier,
    deviance_paths: &mut Vec<Vec<f64>>,
) -> (bool, String) {
    let d = instance(40, 100, 0.3, 10, Family::Bernoulli, 4242);
    let fam = FamilySpec::new(Family::Bernoulli);
    let alpha = 0.5;
    let lmax = lambda_max(&d, &fam, alpha).expect("lambda_max");
    let grid = build_path(lmax, 100, 0.01).expect("grid");

    let mut cfg = PathConfig::new(certified_config(Algorithm::Eccd, 8, 0.0, alpha));
    cfg.early_stop = false;
    let warm = solve_path(&d, &fam, &grid, &cfg).expect("path");
    assert_eq!(warm.len(), 100);
    for (lam, fit) in warm.lambdas.iter().zip(warm.fits.iter()) {
        cert.certify("warm-start", &d, &fam, fit, *lam, alpha);
    }
    deviance_paths.push(warm.fits.iter().map(|f| f.deviance).collect());

    let mut worst: f64 = 0.0;
    for (k, &lam) in grid.values.iter().enumerate() {
        let cold_cfg = certified_config(Algorithm::Eccd, 8, lam, alpha);
        let cold = solve_single_lambda(&d, &fam, &cold_cfg, None).expect("solve");
        cert.certify("cold-refit", &d, &fam, &cold, lam, alpha);
        let rel = (warm.fits[k].objective - cold.objective).abs() / cold.objective.abs().max(1e-300);
        worst = worst.max(rel);
        if rel >= 1e-6 {
            return (false, format!("grid point {k}: warm vs cold rel diff {rel:.2e} >= 1e-6"));
        }
    }
    (true, format!("100 grid points, worst warm-vs-cold objective rel diff {worst:.1e} < 1e-6"))
}

fn criterion_9_deviance(deviance_paths: &[Vec<f64>]) -> (bool, String) {
    let bern = FamilySpec::new(Family::Bernoulli);
    let dev = null_deviance(array![0.0, 1.0].view(), &bern).expect("closed form");
    if (dev - 4.0 * 2.0f64.ln()).abs() > 1e-12 {
        return (false, format!("two-label null deviance {dev} differs from 4 ln 2"));
    }
    let gauss = FamilySpec::new(Family::Gaussian);
    let dev = null_deviance(array![1.0, 1.0].view(), &gauss).expect("closed form");
    if dev.abs() > 1e-12 {
        return (false, format!("constant-response squared-error deviance {dev} not 0"));
    }
    let pois = FamilySpec::new(Family::Poisson);
    let dev = null_deviance(array![1.0, 1.0, 1.0].view(), &pois).expect("closed form");
    if dev.abs() > 1e-12 {
        return (false, format!("constant-count deviance {dev} not 0"));
    }

    let mut sequences = 0;
    for devs in deviance_paths {
        for (k, w) in devs.windows(2).enumerate() {
            if w[1] > w[0] + 1e-8 * w[0].abs() {
                return (
                    false,
                    format!("deviance rose along a path at grid point {}: {} -> {}", k + 1, w[0], w[1]),
                );
            }
        }
        sequences += 1;
    }
    (
        true,
        format!("closed forms match to 1e-12; {sequences} recorded deviance paths non-increasing within 1e-8"),
    )
}

fn criterion_10_derivatives() -> (bool, String) {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (family, lo, hi) in [
        (Family::Gaussian, -30.0, 30.0),
        (Family::Bernoulli, -30.0, 30.0),
        (Family::Poisson, -10.0, 5.0),
        (Family::Gamma, -10.0, -0.1),
    ] {
        let fam = FamilySpec::new(family);
        for t in 0..1000 {
            let eta = lo + (hi - lo) * (t as f64 + 0.5) / 1000.0;
            let fd_mean =
                (fam.cgf(eta + h).unwrap() - fam.cgf(eta - h).unwrap()) / (2.0 * h);
            let fd_weight =
                (fam.mean(eta + h).unwrap() - fam.mean(eta - h).unwrap()) / (2.0 * h);
            let e1 = (fd_mean - fam.mean(eta).unwrap()).abs();
            let e2 = (fd_weight - fam.variance_weight(eta).unwrap()).abs();
            worst = worst.max(e1).max(e2);
            if e1 > 1e-6 || e2 > 1e-6 {
                return (
                    false,
                    format!("{} at eta={eta:.3}: derivative errors {e1:.2e}/{e2:.2e}", fam.kind.name()),
                );
            }
        }
    }
    (true, format!("4000 finite-difference points across 4 families, worst error {worst:.1e} <= 1e-6"))
}

fn criterion_11_speed() -> (bool, String) {
    let d = instance(200, 20_000, 0.2, 50, Family::Bernoulli, 9999);
    let fam = FamilySpec::new(Family::Bernoulli);
    let alpha = 0.5;
    let lmax = lambda_max(&d, &fam, alpha).expect("lambda_max");
    let grid = build_path(lmax, 100, 0.01).expect("grid");

    let run = |s: usize| -> f64 {
        let mut cfg = PathConfig::new(SolveConfig::new(Algorithm::Eccd, 0.0, alpha));
        cfg.solve.block_size = s;
        cfg.early_stop = false;
        let t = Instant::now();
        let res = solve_path(&d, &fam, &grid, &cfg).expect("path");
        let secs = t.elapsed().as_secs_f64();
        assert_eq!(res.len(), 100);
        secs
    };

    run(8); // warm the caches before timing
    let mut t1 = Vec::new();
    let mut t8 = Vec::new();
    for _ in 0..3 {
        t1.push(run(1));
        t8.push(run(8));
    }
    t1.sort_by(f64::total_cmp);
    t8.sort_by(f64::total_cmp);
    let ratio = t8[1] / t1[1];
    (
        ratio <= 0.9,
        format!(
            "median path time s=8 {:.2}s vs s=1 {:.2}s, ratio {ratio:.2} (target <= 0.9, advisory)",
            t8[1], t1[1]
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let mut tally = Tally { failures: Vec::new() };
    let mut cert = Certifier::new();
    let mut deviance_paths: Vec<Vec<f64>> = Vec::new();

    let t = Instant::now();
    let (pass, detail) = criterion_1_cd_equivalence();
    tally.record(1, "unit-block engine equals per-coordinate baseline", pass, &detail, t.elapsed().as_secs_f64(), Some(10.0));

    let t = Instant::now();
    let (pass, detail) = criterion_2_gaussian_exactness();
    tally.record(2, "quadratic-family block updates match unit blocks", pass, &detail, t.elapsed().as_secs_f64(), Some(10.0));

    // Strongly correlated wide logistic design: the correlation is what makes
    // stale within-block gradients diverge at small penalties.
    let study = PathStudy {
        dataset: instance(44, 2000, 0.4, 20, Family::Bernoulli, 7777),
        family: FamilySpec::new(Family::Bernoulli),
    };

    let t = Instant::now();
    let (pass, detail) = criterion_3_path_agreement(&study, &mut cert, &mut deviance_paths);
    tally.record(3, "path objectives agree across block sizes", pass, &detail, t.elapsed().as_secs_f64(), Some(60.0));

    let t = Instant::now();
    let (pass, detail) = criterion_4_bcd_instability(&study, &mut cert);
    tally.record(4, "stale blocks explode where corrected blocks stay stable", pass, &detail, t.elapsed().as_secs_f64(), Some(60.0));

    let t = Instant::now();
    let (pass, detail) = criterion_5_oracle_equivalence(&mut cert);
    tally.record(5, "solver matches independent reference solvers", pass, &detail, t.elapsed().as_secs_f64(), Some(120.0));

    let t = Instant::now();
    let (pass, detail) = criterion_7_screening_safety(&mut cert, &mut deviance_paths);
    tally.record(7, "screening never changes the solution", pass, &detail, t.elapsed().as_secs_f64(), Some(120.0));

    let t = Instant::now();
    let (pass, detail) = criterion_8_warm_start(&mut cert, &mut deviance_paths);
    tally.record(8, "warm-started path equals cold per-penalty fits", pass, &detail, t.elapsed().as_secs_f64(), Some(60.0));

    // Reported after 7 and 8 so their fits are included in the certificate.
    let t = Instant::now();
    let (pass, detail) = criterion_6_kkt(&cert);
    tally.record(6, "stationarity certificate on all converged fits", pass, &detail, t.elapsed().as_secs_f64(), None);

    let t = Instant::now();
    let (pass, detail) = criterion_9_deviance(&deviance_paths);
    tally.record(9, "deviance closed forms and monotone paths", pass, &detail, t.elapsed().as_secs_f64(), None);

    let t = Instant::now();
    let (pass, detail) = criterion_10_derivatives();
    tally.record(10, "family derivatives match finite differences", pass, &detail, t.elapsed().as_secs_f64(), None);

    let t = Instant::now();
    let (pass, detail) = criterion_11_speed();
    tally.warn_only(11, "blocked sweeps beat per-coordinate sweeps on a wide path", pass, &detail, t.elapsed().as_secs_f64());

    assert!(
        tally.failures.is_empty(),
        "acceptance failures: {}",
        tally.failures.join(", ")
    );
}
