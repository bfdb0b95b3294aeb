//! Dataset resolution shared by every subcommand: file loading, synthetic
//! generation, family parsing, and the standardization step the solvers
//! require.

use crate::DataArgs;
use eccd::data::{
    coerce_binary_labels, generate_synthetic, load_csv, load_libsvm, Dataset, SyntheticConfig,
};
use eccd::{Family, FamilySpec};
use std::path::Path;

/// Accepts the common GLM names; `binomial` and `bernoulli` are synonyms.
pub fn parse_family(name: &str) -> Result<FamilySpec, String> {
    let kind = match name {
        "gaussian" => Family::Gaussian,
        "binomial" | "bernoulli" => Family::Bernoulli,
        "poisson" => Family::Poisson,
        "gamma" => Family::Gamma,
        other => {
            return Err(format!(
                "unknown family `{other}` (expected gaussian, binomial, poisson, or gamma)"
            ))
        }
    };
    Ok(FamilySpec::new(kind))
}

/// Parse "n,p,rho,s_true[,seed]"; the seed falls back to `default_seed`.
pub fn parse_gen_spec(spec: &str, default_seed: u64) -> Result<(usize, usize, f64, usize, u64), String> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 && parts.len() != 5 {
        return Err(format!(
            "--gen expects n,p,rho,s_true[,seed], got {} fields in `{spec}`"
        , parts.len()));
    }
    let n: usize = parts[0].parse().map_err(|_| format!("--gen: bad n `{}`", parts[0]))?;
    let p: usize = parts[1].parse().map_err(|_| format!("--gen: bad p `{}`", parts[1]))?;
    let rho: f64 = parts[2].parse().map_err(|_| format!("--gen: bad rho `{}`", parts[2]))?;
    let s: usize = parts[3].parse().map_err(|_| format!("--gen: bad s_true `{}`", parts[3]))?;
    let seed = if parts.len() == 5 {
        parts[4].parse().map_err(|_| format!("--gen: bad seed `{}`", parts[4]))?
    } else {
        default_seed
    };
    if n == 0 || p == 0 {
        return Err("--gen: n and p must be at least 1".into());
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(format!("--gen: rho must lie in [0, 1), got {rho}"));
    }
    if s > p {
        return Err(format!("--gen: s_true {s} exceeds p {p}"));
    }
    Ok((n, p, rho, s, seed))
}

/// Generate the raw (unstandardized) dataset described by a --gen spec.
pub fn generate(spec: &str, default_seed: u64, family: &FamilySpec) -> eccd::Result<Dataset> {
    let (n, p, rho, s_true, seed) = parse_gen_spec(spec, default_seed)
        .map_err(eccd::EccdError::Config)?;
    generate_synthetic(&SyntheticConfig::new(n, p, rho, s_true, family.kind, seed))
}

/// Load or generate the dataset named by the shared data flags, coerce
/// binomial labels onto {0, 1}, and standardize.
pub fn load(args: &DataArgs) -> eccd::Result<(Dataset, FamilySpec)> {
    let family = parse_family(&args.family).map_err(eccd::EccdError::Config)?;
    let mut d = if let Some(path) = &args.input {
        read_file(path, args.format.as_deref(), args.csv_header)?
    } else {
        let spec = args.gen.as_ref().expect("validated: input or gen is present");
        generate(spec, args.seed, &family)?
    };
    if family.kind == Family::Bernoulli {
        coerce_binary_labels(&mut d.y)?;
    }
    d.standardize().map(|d| (d, family))
}

fn read_file(path: &Path, format: Option<&str>, csv_header: bool) -> eccd::Result<Dataset> {
    let format = format.map(str::to_owned).unwrap_or_else(|| {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => "csv".into(),
            _ => "libsvm".into(),
        }
    });
    match format.as_str() {
        "csv" => load_csv(path, csv_header),
        _ => load_libsvm(path, None),
    }
}

/// Resolve the penalty grid for a path-shaped command.
pub fn resolve_grid(
    d: &Dataset,
    family: &FamilySpec,
    alpha: f64,
    explicit: Option<&str>,
    nlambda: usize,
    min_ratio: Option<f64>,
) -> eccd::Result<eccd::path::LambdaPath> {
    if let Some(spec) = explicit {
        let values = crate::parse_grid(spec).map_err(eccd::EccdError::Config)?;
        let min_ratio = values.last().unwrap() / values[0];
        return Ok(eccd::path::LambdaPath { values, min_ratio });
    }
    let lmax = eccd::path::lambda_max(d, family, alpha)?;
    let ratio = min_ratio.unwrap_or_else(|| eccd::path::default_min_ratio(d.n(), d.p()));
    eccd::path::build_path(lmax, nlambda, ratio)
}
