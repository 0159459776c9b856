//! Thin command-line front end over the `gosf` library.
//!
//! Every subcommand emits one versioned JSON record that embeds the fully
//! resolved configuration, so identical invocations produce byte-identical
//! output. Wall time and progress go to stderr only. Exit codes: 0 success,
//! 2 input error, 3 solver/bootstrap failure.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gosf::bootstrap::{bootstrap_distribution, sparse_condition_number, validity_diagnostic};
use gosf::guard::{constrained_cv_select, path_select, render_table, GuardSettings};
use gosf::lamm::LammConfig;
use gosf::lasso::{argmin_error, auto_grid, cross_validate, lambda_max, solve_path};
use gosf::model::{poisson_clamp_count, Dataset, Family, LossModel};
use gosf::simlab::{histogram, run_null_experiment, run_power_experiment, BetaStar, SimConfig};
use gosf::stat::{gosf_statistic, scale_factor};
use gosf::{CovarianceSpec, Error};

#[derive(Parser)]
#[command(
    name = "gosf",
    version,
    about = "Goodness-of-spurious-fit statistics and guards for variable selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiplier-bootstrap benchmark quantiles q_{n,α}(s, p) for a design.
    Quantile(QuantileArgs),
    /// The goodness-of-spurious-fit statistic 2·LR_n(s, p) for a dataset.
    Gosf(GosfArgs),
    /// Spurious-fit decision for a fitted model (supplied or CV lasso).
    Guard(GuardArgs),
    /// Walk the lasso path and stop it at the GOSF benchmark.
    PathSelect(PathSelectArgs),
    /// Reproducible simulation experiments (null law, power, calibration).
    Simulate(SimulateArgs),
}

#[derive(Args, Serialize)]
struct CommonIo {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
    /// Rescale design columns to unit sample second moment.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    standardize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = automatic). GOSF_WORKERS applies when absent.
    #[arg(long)]
    #[serde(skip)]
    workers: Option<usize>,
}

impl CommonIo {
    fn resolved_workers(&self) -> usize {
        self.workers
            .or_else(|| std::env::var("GOSF_WORKERS").ok().and_then(|v| v.parse().ok()))
            .unwrap_or(0)
    }
}

#[derive(Args, Serialize)]
struct QuantileArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: CommonIo,
    /// Drop this response column from the design before bootstrapping.
    #[arg(long)]
    response: Option<String>,
    /// Model size; repeatable for several sizes.
    #[arg(long, required = true)]
    s: Vec<usize>,
    /// Upper quantile level; repeatable.
    #[arg(long, default_values_t = [0.1])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    b: usize,
}

#[derive(Args, Serialize)]
struct GosfArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: CommonIo,
    #[arg(long)]
    response: String,
    #[arg(long)]
    family: Family,
    #[arg(long)]
    s: usize,
    /// Pin the gaussian σ² instead of the plug-in estimate.
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args, Serialize)]
struct GuardArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: CommonIo,
    #[arg(long)]
    response: String,
    #[arg(long)]
    family: Family,
    #[arg(long, default_values_t = [0.1])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    b: usize,
    /// Coefficient file (one value per line) for an externally fitted model;
    /// without it a cross-validated lasso is fitted internally.
    #[arg(long)]
    beta: Option<PathBuf>,
    /// Cross-validation folds for the internal fit.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Pin the gaussian σ².
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args, Serialize)]
struct PathSelectArgs {
    #[command(flatten)]
    #[serde(flatten)]
    io: CommonIo,
    #[arg(long)]
    response: String,
    #[arg(long)]
    family: Family,
    /// Quantile levels; the first drives the stopping rule.
    #[arg(long, default_values_t = [0.1])]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    b: usize,
    /// Cross-validation folds for the report column (0 skips CV).
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Keep evaluating rows past the stopping point.
    #[arg(long, default_value_t = false)]
    full_path: bool,
    /// Also report the best cross-validated model among rows beating GOSF.
    #[arg(long, default_value_t = false)]
    constrained_cv: bool,
    /// Write the aligned text table here.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Pin the gaussian σ².
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// null: fitted statistic vs reference law; power: CV-lasso detection
    /// under the alternative; calibrate: benchmark coverage under the null.
    #[arg(long)]
    mode: SimMode,
    #[arg(long)]
    family: Family,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 1)]
    s: usize,
    /// identity | ar1:RHO | longmem:RHO
    #[arg(long, default_value = "identity")]
    covariance: String,
    /// zero | five-spike | comma-separated coefficients
    #[arg(long, default_value = "zero")]
    beta_star: String,
    #[arg(long, default_value_t = 200)]
    n_sims: usize,
    #[arg(long, default_value_t = 1000)]
    b: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = false)]
    compute_s_fit: bool,
    /// λ-span of the path handed to the selector, as a fraction of λ_max.
    #[arg(long, default_value_t = 0.12)]
    path_lambda_ratio: f64,
    /// Histogram bins emitted alongside the samples.
    #[arg(long, default_value_t = 40)]
    bins: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    standardize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    workers: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
enum SimMode {
    Null,
    Power,
    Calibrate,
}

#[derive(Serialize)]
struct Record<C: Serialize, R: Serialize> {
    schema_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    command: &'static str,
    config: C,
    counters: Counters,
    result: R,
}

#[derive(Serialize)]
struct Counters {
    poisson_clamps: u64,
    bootstrap_redraws: usize,
}

fn emit<C: Serialize, R: Serialize>(
    command: &'static str,
    config: &C,
    result: &R,
    redraws: usize,
    output: Option<&PathBuf>,
) -> Result<(), Error> {
    let record = Record {
        schema_version: 1,
        tool: "gosf",
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        counters: Counters {
            poisson_clamps: poisson_clamp_count(),
            bootstrap_redraws: redraws,
        },
        result,
    };
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| Error::Input(format!("serialization failed: {e}")))?;
    match output {
        Some(path) => std::fs::write(path, json.as_bytes())
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(json.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| Error::Input(format!("cannot write to stdout: {e}")))
        }
    }
}

fn load_dataset(io: &CommonIo, response: &str, family: Family, sigma2: Option<f64>) -> Result<(Dataset, LossModel), Error> {
    let loaded = gosf::io::load_csv(&io.input, response)?;
    let dataset = if io.standardize {
        loaded.dataset.standardized()?
    } else {
        loaded.dataset
    };
    let mut model = LossModel::new(family);
    if let Some(s2) = sigma2 {
        if family != Family::Gaussian {
            return Err(Error::Input("--sigma2 applies to the gaussian family only".into()));
        }
        model = model.with_dispersion(s2)?;
    }
    model.validate_response(&dataset)?;
    Ok((dataset, model))
}

#[derive(Serialize)]
struct QuantileEntry {
    s: usize,
    n: usize,
    p: usize,
    b: usize,
    quantiles: Vec<QuantileLine>,
    samples: Vec<f64>,
    redraws: usize,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct QuantileLine {
    alpha: f64,
    /// On the R_n scale (compare √(2·L̂R/scale) against this).
    q: f64,
    /// On the R_n² scale (compare 2·L̂R against scale times this).
    q_squared: f64,
}

#[derive(Serialize)]
struct Diagnostics {
    /// Plug-in value of s·log(p·n)/n^{1/5}; small values support the
    /// bootstrap approximation.
    validity: f64,
    /// s-sparse condition number of the sample covariance (p ≤ 15 only).
    gamma_s: Option<f64>,
}

fn run_quantile(args: &QuantileArgs) -> Result<(), Error> {
    let (design, _names) = match &args.response {
        Some(col) => {
            let loaded = gosf::io::load_csv(&args.io.input, col)?;
            (loaded.dataset.design().clone(), loaded.feature_names)
        }
        None => gosf::io::load_design_csv(&args.io.input)?,
    };
    let design = if args.io.standardize {
        design.standardized()?
    } else {
        design
    };
    for &a in &args.alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Input(format!("alpha must lie in (0, 1), got {a}")));
        }
    }
    let workers = args.io.resolved_workers();
    let config = LammConfig::default();
    let mut entries = Vec::new();
    let mut total_redraws = 0usize;
    for &s in &args.s {
        let dist = bootstrap_distribution(&design, s, args.b, &config, args.io.seed, workers)?;
        let quantiles = args
            .alpha
            .iter()
            .map(|&alpha| {
                Ok(QuantileLine {
                    alpha,
                    q: dist.quantile(alpha)?,
                    q_squared: dist.quantile_squared(alpha)?,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let gamma_s = if design.p() <= 15 {
            let sample_cov = design.matrix().tr_mul(design.matrix()) / design.n() as f64;
            Some(sparse_condition_number(
                &CovarianceSpec::Explicit { matrix: sample_cov },
                s,
            )?)
        } else {
            None
        };
        total_redraws += dist.redraws;
        entries.push(QuantileEntry {
            s,
            n: design.n(),
            p: design.p(),
            b: args.b,
            quantiles,
            samples: dist.samples().to_vec(),
            redraws: dist.redraws,
            diagnostics: Diagnostics {
                validity: validity_diagnostic(design.n(), design.p(), s),
                gamma_s,
            },
        });
    }
    emit("quantile", args, &entries, total_redraws, args.io.output.as_ref())
}

#[derive(Serialize)]
struct GosfResult {
    statistic: gosf::GosfStatistic,
    sqrt_two_lr: f64,
    /// √(2·L̂R / scale), the value to compare against q_{n,α}.
    sqrt_two_lr_scaled: f64,
}

fn run_gosf(args: &GosfArgs) -> Result<(), Error> {
    let (dataset, model) = load_dataset(&args.io, &args.response, args.family, args.sigma2)?;
    let config = LammConfig {
        seed: args.io.seed,
        ..LammConfig::default()
    };
    let statistic = gosf_statistic(&model, &dataset, args.s, &config)?;
    let result = GosfResult {
        sqrt_two_lr: statistic.two_lr.sqrt(),
        sqrt_two_lr_scaled: (statistic.two_lr / statistic.scale).sqrt(),
        statistic,
    };
    emit("gosf", args, &result, 0, args.io.output.as_ref())
}

#[derive(Serialize)]
struct GuardResult {
    source: &'static str,
    s_hat: usize,
    two_lr: f64,
    sqrt_two_lr: f64,
    scale: f64,
    decisions: Vec<DecisionLine>,
    lambda_cv: Option<f64>,
    cv_error: Option<f64>,
    validity: f64,
}

#[derive(Serialize)]
struct DecisionLine {
    alpha: f64,
    q: f64,
    q_squared: f64,
    spurious: bool,
}

fn read_beta_file(path: &PathBuf, p: usize) -> Result<nalgebra::DVector<f64>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let values: Vec<f64> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Error::Input(format!("non-numeric coefficient '{l}'")))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != p {
        return Err(Error::Input(format!(
            "coefficient file has {} values, expected p = {p}",
            values.len()
        )));
    }
    Ok(nalgebra::DVector::from_vec(values))
}

fn run_guard(args: &GuardArgs) -> Result<(), Error> {
    let (dataset, model) = load_dataset(&args.io, &args.response, args.family, args.sigma2)?;
    for &a in &args.alpha {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::Input(format!("alpha must lie in (0, 1), got {a}")));
        }
    }
    let workers = args.io.resolved_workers();
    let scale = scale_factor(&model, &dataset)?;
    let baseline = gosf::model::baseline_value(&model, &dataset);

    let (source, beta, lambda_cv, cv_error) = match &args.beta {
        Some(path) => {
            let beta = read_beta_file(path, dataset.p())?;
            ("supplied-beta", beta, None, None)
        }
        None => {
            let lmax = lambda_max(&model, &dataset)?;
            if lmax <= 0.0 {
                return Err(Error::Solver("degenerate path: zero gradient at origin".into()));
            }
            let grid = auto_grid(lmax);
            let path = solve_path(&model, &dataset, &grid)?;
            let errors = cross_validate(&model, &dataset, args.folds, &grid, args.io.seed)?;
            let idx = argmin_error(&errors);
            (
                "cv-lasso",
                path[idx].beta.clone(),
                Some(grid[idx]),
                Some(errors[idx]),
            )
        }
    };
    let s_hat = beta.iter().filter(|v| **v != 0.0).count();
    let loss = gosf::model::loss_value(&model, &dataset, &beta)?;
    let two_lr = (2.0 * (baseline - loss)).max(0.0);

    let (decisions, redraws) = if s_hat == 0 {
        let decisions = args
            .alpha
            .iter()
            .map(|&alpha| DecisionLine {
                alpha,
                q: 0.0,
                q_squared: 0.0,
                spurious: true,
            })
            .collect();
        (decisions, 0)
    } else {
        let config = LammConfig::default();
        let dist = bootstrap_distribution(
            dataset.design(),
            s_hat,
            args.b,
            &config,
            args.io.seed,
            workers,
        )?;
        let decisions = args
            .alpha
            .iter()
            .map(|&alpha| {
                let d = gosf::guard::spurious_test(two_lr, s_hat, &dist, alpha, scale)?;
                Ok(DecisionLine {
                    alpha,
                    q: d.q_alpha,
                    q_squared: d.q_alpha * d.q_alpha,
                    spurious: d.spurious,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        (decisions, dist.redraws)
    };

    let result = GuardResult {
        source,
        s_hat,
        two_lr,
        sqrt_two_lr: two_lr.sqrt(),
        scale,
        decisions,
        lambda_cv,
        cv_error,
        validity: validity_diagnostic(dataset.n(), dataset.p(), s_hat.max(1)),
    };
    emit("guard", args, &result, redraws, args.io.output.as_ref())
}

#[derive(Serialize)]
struct PathSelectResult {
    report: gosf::GuardReport,
    constrained_cv: Option<ConstrainedCv>,
}

#[derive(Serialize)]
struct ConstrainedCv {
    lambda: f64,
    s: usize,
}

fn run_path_select(args: &PathSelectArgs) -> Result<(), Error> {
    let (dataset, model) = load_dataset(&args.io, &args.response, args.family, args.sigma2)?;
    let workers = args.io.resolved_workers();
    let scale = scale_factor(&model, &dataset)?;
    let lmax = lambda_max(&model, &dataset)?;
    if lmax <= 0.0 {
        return Err(Error::Solver("degenerate path: zero gradient at origin".into()));
    }
    let grid = auto_grid(lmax);
    let mut path = solve_path(&model, &dataset, &grid)?;
    if args.folds >= 2 {
        let errors = cross_validate(&model, &dataset, args.folds, &grid, args.io.seed)?;
        for (point, &err) in path.iter_mut().zip(errors.iter()) {
            point.cv_error = Some(err);
        }
    }
    let settings = GuardSettings {
        alphas: args.alpha.clone(),
        b: args.b,
        seed: args.io.seed,
        workers,
        scale,
        solver: LammConfig {
            seed: args.io.seed,
            ..LammConfig::default()
        },
        evaluate_full_path: args.full_path,
    };
    let report = path_select(&path, dataset.design(), &settings)?;
    if let Some(table_path) = &args.table {
        let table = render_table(&report, &args.alpha)?;
        std::fs::write(table_path, table)
            .map_err(|e| Error::Input(format!("cannot write {}: {e}", table_path.display())))?;
    }
    let constrained = if args.constrained_cv {
        constrained_cv_select(&report).map(|(lambda, s)| ConstrainedCv { lambda, s })
    } else {
        None
    };
    let result = PathSelectResult {
        constrained_cv: constrained,
        report,
    };
    emit("path-select", args, &result, 0, args.io.output.as_ref())
}

fn parse_covariance(text: &str, p: usize) -> Result<CovarianceSpec, Error> {
    let lower = text.to_ascii_lowercase();
    if lower == "identity" {
        return Ok(CovarianceSpec::Identity { p });
    }
    if let Some(rho) = lower.strip_prefix("ar1:") {
        let rho: f64 = rho
            .parse()
            .map_err(|_| Error::Input(format!("bad ar1 correlation '{rho}'")))?;
        return Ok(CovarianceSpec::Ar1 { p, rho });
    }
    if let Some(rho) = lower.strip_prefix("longmem:") {
        let rho: f64 = rho
            .parse()
            .map_err(|_| Error::Input(format!("bad long-memory exponent '{rho}'")))?;
        return Ok(CovarianceSpec::LongMemory { p, rho });
    }
    Err(Error::Input(format!(
        "unknown covariance '{text}' (expected identity | ar1:RHO | longmem:RHO)"
    )))
}

fn parse_beta_star(text: &str, p: usize) -> Result<BetaStar, Error> {
    match text.to_ascii_lowercase().as_str() {
        "zero" => Ok(BetaStar::Zero),
        "five-spike" | "five_spike" => Ok(BetaStar::FiveSpike),
        other => {
            let values: Vec<f64> = other
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Input(format!("bad coefficient '{v}' in --beta-star")))
                })
                .collect::<Result<_, _>>()?;
            if values.len() != p {
                return Err(Error::Input(format!(
                    "--beta-star lists {} coefficients, expected p = {p}",
                    values.len()
                )));
            }
            Ok(BetaStar::Custom(values))
        }
    }
}

#[derive(Serialize)]
struct SimulateResult {
    sim: gosf::SimResult,
    histogram: gosf::simlab::Histogram,
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let covariance = parse_covariance(&args.covariance, args.p)?;
    let beta_star = parse_beta_star(&args.beta_star, args.p)?;
    let config = SimConfig {
        n: args.n,
        p: args.p,
        s: args.s,
        family: args.family,
        covariance,
        beta_star,
        n_sims: args.n_sims,
        b: args.b,
        alpha: args.alpha,
        seed: args.seed,
        folds: args.folds,
        standardize: args.standardize,
        compute_s_fit: args.compute_s_fit,
        path_lambda_ratio: args.path_lambda_ratio,
        workers: args
            .workers
            .or_else(|| std::env::var("GOSF_WORKERS").ok().and_then(|v| v.parse().ok()))
            .unwrap_or(0),
    };
    let sim = match args.mode {
        SimMode::Null => run_null_experiment(&config)?,
        SimMode::Power => run_power_experiment(&config)?,
        SimMode::Calibrate => gosf::simlab::run_null_calibration(&config)?,
    };
    log::info!(
        "simulate finished in {:.1}s ({} failures)",
        sim.runtime,
        sim.failures
    );
    let hist = histogram(&sim.glr_samples, &sim.gar_samples, args.bins)?;
    let result = SimulateResult { sim, histogram: hist };
    emit("simulate", args, &result, 0, args.output.as_ref())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GOSF_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let start = Instant::now();
    let (name, outcome) = match &cli.command {
        Command::Quantile(args) => ("quantile", run_quantile(args)),
        Command::Gosf(args) => ("gosf", run_gosf(args)),
        Command::Guard(args) => ("guard", run_guard(args)),
        Command::PathSelect(args) => ("path-select", run_path_select(args)),
        Command::Simulate(args) => ("simulate", run_simulate(args)),
    };
    match outcome {
        Ok(()) => {
            log::info!("{name} completed in {:.2}s", start.elapsed().as_secs_f64());
        }
        Err(e) => {
            eprintln!("gosf {name}: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
