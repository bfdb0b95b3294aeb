//! Command-line front end for the elastic-net GLM solver: single fits,
//! regularization paths, block-size benchmarks, a block-size profiler, and a
//! synthetic-data generator.
//!
//! Exit codes: 0 success, 1 data or convergence failure, 2 usage error.
//! Usage errors are flag problems caught before any data is touched; once a
//! command starts running, every failure maps to exit 1.

mod bench_cmd;
mod fit_cmd;
mod gen_cmd;
mod path_cmd;
mod profile_cmd;
mod source;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "eccd", version, about = "Elastic-net GLM solver with block-corrected coordinate descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one penalized fit and print it as JSON.
    Fit(FitArgs),
    /// Fit a full regularization path and print it as CSV.
    Path(PathArgs),
    /// Time algorithm and block-size sweeps and print a CSV report.
    Bench(BenchArgs),
    /// Measure the gradient/add cost ratio and recommend a block size.
    Profile(ProfileArgs),
    /// Write a synthetic problem to a LIBSVM file.
    Gen(GenArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Input data file.
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// Input format: libsvm | csv. Default: by file extension.
    #[arg(long, requires = "input")]
    format: Option<String>,
    /// Treat the first CSV row as a header.
    #[arg(long, requires = "input")]
    csv_header: bool,
    /// Synthetic problem spec "n,p,rho,s_true[,seed]".
    #[arg(long)]
    gen: Option<String>,
    /// Seed used when --gen omits its seed field.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Response family: gaussian | binomial | poisson | gamma.
    #[arg(long)]
    family: String,
}

#[derive(Args)]
struct SolveArgs {
    /// Elastic-net mixing: 1 is lasso, 0 is ridge.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Engine: eccd | bcd | cd.
    #[arg(long, default_value = "eccd")]
    algorithm: String,
    /// Coordinates updated per gradient refresh.
    #[arg(long, default_value_t = 8)]
    block_size: usize,
    /// Convergence tolerance relative to the null deviance.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_epochs: usize,
    /// Fit without an intercept.
    #[arg(long)]
    no_intercept: bool,
    /// Disable the square-root cap on the effective block size.
    #[arg(long)]
    no_active_cap: bool,
    /// Abort threshold for the runaway-objective guard.
    #[arg(long, default_value_t = 1e12)]
    max_objective: f64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// Penalty strength.
    #[arg(long)]
    lambda: f64,
    /// Cross-check the solution against the proximal-gradient reference.
    #[arg(long)]
    verify: bool,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solve: SolveArgs,
    /// Number of grid points.
    #[arg(long, default_value_t = 100)]
    nlambda: usize,
    /// Smallest penalty as a fraction of the largest. Default: 0.01 when
    /// n < p, 1e-4 otherwise.
    #[arg(long)]
    lambda_min_ratio: Option<f64>,
    /// Explicit decreasing penalty grid "l1,l2,...", overriding --nlambda.
    #[arg(long, conflicts_with_all = ["nlambda", "lambda_min_ratio"])]
    path: Option<String>,
    /// Fit every penalty with the full coordinate set.
    #[arg(long)]
    no_screening: bool,
    /// Fit every penalty from scratch instead of from the previous solution.
    #[arg(long)]
    no_warm_start: bool,
    /// Run the whole grid even when the fit saturates.
    #[arg(long)]
    no_early_stop: bool,
    /// Stop once the support exceeds this many coefficients.
    #[arg(long)]
    ne_limit: Option<usize>,
    /// Stop once 1 - dev/null_dev exceeds this.
    #[arg(long, default_value_t = 0.999)]
    rsq_max: f64,
    /// Stop once the per-step deviance gain, relative to twice the null
    /// deviance, falls below this.
    #[arg(long, default_value_t = 1e-5)]
    sml: f64,
    /// Emit the dense coefficient path as JSON instead of CSV.
    #[arg(long)]
    json: bool,
    /// Write the output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Engines to sweep, comma-separated.
    #[arg(long, default_value = "eccd")]
    algorithms: String,
    /// Block sizes to sweep, comma-separated.
    #[arg(long, default_value = "1,2,4,8,16,32")]
    s_list: String,
    /// Mixing values to sweep, comma-separated.
    #[arg(long, default_value = "1.0")]
    alpha_list: String,
    /// Benchmark a single penalty instead of a full path.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 100)]
    nlambda: usize,
    #[arg(long)]
    lambda_min_ratio: Option<f64>,
    /// Timed repetitions per cell; the reported time is the median.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Add per-phase timing columns.
    #[arg(long)]
    timings: bool,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_epochs: usize,
    #[arg(long)]
    no_screening: bool,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    no_active_cap: bool,
    #[arg(long)]
    no_intercept: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    /// Response family: gaussian | binomial | poisson | gamma.
    #[arg(long)]
    family: String,
}

#[derive(Args)]
struct GenArgs {
    /// Synthetic problem spec "n,p,rho,s_true[,seed]".
    #[arg(long)]
    gen: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Response family: gaussian | binomial | poisson.
    #[arg(long)]
    family: String,
    /// Output LIBSVM file.
    #[arg(long)]
    out: PathBuf,
}

impl SolveArgs {
    fn to_config(&self, lambda: f64) -> eccd::solvers::SolveConfig {
        let algorithm =
            eccd::solvers::Algorithm::parse(&self.algorithm).expect("validated before dispatch");
        let mut cfg = eccd::solvers::SolveConfig::new(algorithm, lambda, self.alpha);
        cfg.block_size = self.block_size;
        cfg.tol = self.tol;
        cfg.max_epochs = self.max_epochs;
        cfg.fit_intercept = !self.no_intercept;
        cfg.active_set_cap = !self.no_active_cap;
        cfg.max_objective = self.max_objective;
        cfg
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let checked = match &cli.command {
        Command::Fit(a) => validate_fit(a),
        Command::Path(a) => validate_path(a),
        Command::Bench(a) => validate_bench(a),
        Command::Profile(a) => source::parse_family(&a.family).map(|_| ()),
        Command::Gen(a) => validate_gen(a),
    };
    if let Err(msg) = checked {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }

    let run = match cli.command {
        Command::Fit(a) => fit_cmd::run(&a),
        Command::Path(a) => path_cmd::run(&a),
        Command::Bench(a) => bench_cmd::run(&a),
        Command::Profile(a) => profile_cmd::run(&a),
        Command::Gen(a) => gen_cmd::run(&a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Flag validation: everything here is a usage error (exit 2), caught before
/// any data is read.
fn validate_solve(s: &SolveArgs) -> Result<(), String> {
    eccd::solvers::Algorithm::parse(&s.algorithm).map_err(|e| e.to_string())?;
    if !(0.0..=1.0).contains(&s.alpha) {
        return Err(format!("--alpha must lie in [0, 1], got {}", s.alpha));
    }
    if s.block_size == 0 {
        return Err("--block-size must be at least 1".into());
    }
    if !(s.tol > 0.0) || !s.tol.is_finite() {
        return Err(format!("--tol must be a positive number, got {}", s.tol));
    }
    if s.max_epochs == 0 {
        return Err("--max-epochs must be at least 1".into());
    }
    if !(s.max_objective > 0.0) {
        return Err(format!("--max-objective must be positive, got {}", s.max_objective));
    }
    Ok(())
}

fn validate_data(d: &DataArgs) -> Result<(), String> {
    let family = source::parse_family(&d.family)?;
    if d.input.is_none() && d.gen.is_none() {
        return Err("provide a data source: --input FILE or --gen n,p,rho,s_true[,seed]".into());
    }
    if let Some(f) = &d.format {
        if f != "libsvm" && f != "csv" {
            return Err(format!("--format must be libsvm or csv, got {f}"));
        }
    }
    if let Some(g) = &d.gen {
        source::parse_gen_spec(g, d.seed)?;
        if family.kind == eccd::Family::Gamma {
            return Err("--gen draws gaussian, binomial, or poisson responses, not gamma".into());
        }
    }
    Ok(())
}

fn validate_gen(a: &GenArgs) -> Result<(), String> {
    let family = source::parse_family(&a.family)?;
    if family.kind == eccd::Family::Gamma {
        return Err("gen draws gaussian, binomial, or poisson responses, not gamma".into());
    }
    source::parse_gen_spec(&a.gen, a.seed).map(|_| ())
}

fn validate_fit(a: &FitArgs) -> Result<(), String> {
    validate_data(&a.data)?;
    validate_solve(&a.solve)?;
    if !(a.lambda >= 0.0) || !a.lambda.is_finite() {
        return Err(format!("--lambda must be a non-negative number, got {}", a.lambda));
    }
    Ok(())
}

fn validate_path(a: &PathArgs) -> Result<(), String> {
    validate_data(&a.data)?;
    validate_solve(&a.solve)?;
    if a.nlambda == 0 {
        return Err("--nlambda must be at least 1".into());
    }
    if let Some(r) = a.lambda_min_ratio {
        if !(r > 0.0 && r < 1.0) {
            return Err(format!("--lambda-min-ratio must lie in (0, 1), got {r}"));
        }
    }
    if let Some(spec) = &a.path {
        parse_grid(spec)?;
    }
    if !(a.rsq_max > 0.0 && a.rsq_max <= 1.0) {
        return Err(format!("--rsq-max must lie in (0, 1], got {}", a.rsq_max));
    }
    if !(a.sml >= 0.0) {
        return Err(format!("--sml must be non-negative, got {}", a.sml));
    }
    Ok(())
}

fn validate_bench(a: &BenchArgs) -> Result<(), String> {
    validate_data(&a.data)?;
    for name in a.algorithms.split(',') {
        eccd::solvers::Algorithm::parse(name.trim()).map_err(|e| e.to_string())?;
    }
    parse_usize_list(&a.s_list, "--s-list")?;
    let alphas = parse_f64_list(&a.alpha_list, "--alpha-list")?;
    for &v in &alphas {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("--alpha-list entries must lie in [0, 1], got {v}"));
        }
    }
    if let Some(l) = a.lambda {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(format!("--lambda must be a non-negative number, got {l}"));
        }
    }
    if a.reps == 0 {
        return Err("--reps must be at least 1".into());
    }
    if a.nlambda == 0 {
        return Err("--nlambda must be at least 1".into());
    }
    if !(a.tol > 0.0) || !a.tol.is_finite() {
        return Err(format!("--tol must be a positive number, got {}", a.tol));
    }
    Ok(())
}

fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let v: usize = tok
            .trim()
            .parse()
            .map_err(|_| format!("{flag}: bad entry `{tok}`"))?;
        if v == 0 {
            return Err(format!("{flag}: entries must be at least 1"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(format!("{flag}: empty list"));
    }
    Ok(out)
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for tok in s.split(',') {
        let v: f64 = tok
            .trim()
            .parse()
            .map_err(|_| format!("{flag}: bad entry `{tok}`"))?;
        if !v.is_finite() {
            return Err(format!("{flag}: entries must be finite"));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(format!("{flag}: empty list"));
    }
    Ok(out)
}

/// Parse an explicit strictly-decreasing positive penalty grid.
fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let values = parse_f64_list(spec, "--path")?;
    for w in values.windows(2) {
        if !(w[1] < w[0]) {
            return Err("--path: penalties must be strictly decreasing".into());
        }
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Err("--path: penalties must be positive".into());
    }
    Ok(values)
}
