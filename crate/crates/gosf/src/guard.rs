//! Guarding discoveries against spurious fits.
//!
//! A fitted model with ŝ selected variables is compared against the
//! bootstrap benchmark for the best s-subset fit of noise: the discovery is
//! spurious when `2·L̂R ≤ scale·q²_{n,α}(ŝ, p)`. Walking a regularization
//! path from the strongest penalty down, the selector stops at the first
//! sign change of `2·L̂R_λ − scale·q²_{n,α}(ŝ_λ, p)` from positive to
//! negative and reports the smallest λ that still beats the benchmark,
//! together with its model size ŝ_fit.

use std::collections::HashMap;

use serde::Serialize;

use crate::bootstrap::{bootstrap_distribution, BootstrapDistribution};
use crate::error::{Error, Result};
use crate::lamm::LammConfig;
use crate::lasso::PathPoint;
use crate::model::Design;

/// Outcome of a single spurious-fit test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GuardDecision {
    /// √(2·L̂R) of the fitted model, unscaled.
    pub sqrt_two_lr: f64,
    /// Benchmark quantile q_{n,α}(ŝ, p) on the R_n scale.
    pub q_alpha: f64,
    pub alpha: f64,
    /// Family scale; the comparison is `2·L̂R ≤ scale·q²`.
    pub scale: f64,
    pub spurious: bool,
}

/// Tests whether a fit with `s_hat` selected variables is spurious at level
/// `alpha`. The distribution must have been built with `s = s_hat`.
pub fn spurious_test(
    two_lr: f64,
    s_hat: usize,
    dist: &BootstrapDistribution,
    alpha: f64,
    scale: f64,
) -> Result<GuardDecision> {
    if dist.s != s_hat {
        return Err(Error::Input(format!(
            "bootstrap distribution was built for s = {} but the fit has ŝ = {s_hat}",
            dist.s
        )));
    }
    if !(two_lr >= 0.0) {
        return Err(Error::Input(format!("2·LR must be nonnegative, got {two_lr}")));
    }
    if !(scale > 0.0) {
        return Err(Error::Input(format!("scale must be positive, got {scale}")));
    }
    let q = dist.quantile(alpha)?;
    Ok(GuardDecision {
        sqrt_two_lr: two_lr.sqrt(),
        q_alpha: q,
        alpha,
        scale,
        spurious: two_lr <= scale * q * q,
    })
}

/// One report row per evaluated path point.
#[derive(Clone, Debug, Serialize)]
pub struct GuardRow {
    pub lambda: f64,
    pub s_hat: usize,
    /// √(2·L̂R_λ).
    pub sqrt_two_lr: f64,
    /// q_{n,α}(ŝ_λ, p) per requested α, on the R_n scale.
    pub q_alpha: Vec<f64>,
    pub cv_error: Option<f64>,
    /// Whether 2·L̂R_λ ≥ scale·q² at the decision level (the first α).
    pub beats_gosf: bool,
}

/// Path walk outcome in the shape of the benchmark table: one row per path
/// point with λ, ŝ_λ, √(2·L̂R_λ) and the bootstrap quantiles, plus the
/// selected model size.
#[derive(Clone, Debug, Serialize)]
pub struct GuardReport {
    pub rows: Vec<GuardRow>,
    /// Support size at `lambda_fit`; 0 when every point is spurious.
    pub s_fit: usize,
    pub lambda_fit: Option<f64>,
    /// Quantile levels per row, in order; the first is the decision level.
    pub alphas: Vec<f64>,
    pub all_spurious: bool,
    pub scale: f64,
    pub b: usize,
    pub seed: u64,
    pub design_hash: u64,
    /// Bootstrap distributions actually built; equals the number of distinct
    /// support sizes evaluated (the per-size cache absorbs repeats).
    pub bootstrap_builds: usize,
}

/// Settings for [`path_select`].
#[derive(Clone, Debug, Serialize)]
pub struct GuardSettings {
    /// Quantile levels; `alphas[0]` drives the stopping rule.
    pub alphas: Vec<f64>,
    pub b: usize,
    pub seed: u64,
    pub workers: usize,
    /// Family scale factor multiplying q²; see `stat::scale_factor`.
    pub scale: f64,
    pub solver: LammConfig,
    /// Keep evaluating rows (and building distributions) past the stopping
    /// point, for a full-path report.
    pub evaluate_full_path: bool,
}

impl GuardSettings {
    pub fn new(alpha: f64, b: usize, seed: u64) -> Self {
        GuardSettings {
            alphas: vec![alpha],
            b,
            seed,
            workers: 0,
            scale: 1.0,
            solver: LammConfig::default(),
            evaluate_full_path: false,
        }
    }
}

/// Walks a descending-λ path, building one bootstrap distribution per
/// distinct support size (shared across points through a cache), and applies
/// the sign-change stopping rule. Zero-support points carry no discovery and
/// are skipped.
pub fn path_select(
    path: &[PathPoint],
    design: &Design,
    settings: &GuardSettings,
) -> Result<GuardReport> {
    if path.is_empty() {
        return Err(Error::Input("empty path".into()));
    }
    if settings.alphas.is_empty() {
        return Err(Error::Input("at least one alpha level is required".into()));
    }
    for w in path.windows(2) {
        if w[1].lambda >= w[0].lambda {
            return Err(Error::Input("path must have strictly descending λ".into()));
        }
    }
    if !(settings.scale > 0.0) {
        return Err(Error::Input(format!(
            "scale must be positive, got {}",
            settings.scale
        )));
    }

    let mut cache: HashMap<usize, BootstrapDistribution> = HashMap::new();
    let mut rows = Vec::new();
    let mut last_beat: Option<(f64, usize)> = None;
    let mut stopped = false;

    for point in path {
        let s = point.support_size;
        if s == 0 {
            continue;
        }
        if stopped && !settings.evaluate_full_path {
            break;
        }
        if !cache.contains_key(&s) {
            let dist = bootstrap_distribution(
                design,
                s,
                settings.b,
                &settings.solver,
                settings.seed,
                settings.workers,
            )
            .map_err(|e| {
                Error::Bootstrap(format!(
                    "at support size {s} after {} evaluated rows: {e}",
                    rows.len()
                ))
            })?;
            cache.insert(s, dist);
        }
        let dist = &cache[&s];
        let q_alpha: Vec<f64> = settings
            .alphas
            .iter()
            .map(|&a| dist.quantile(a))
            .collect::<Result<_>>()?;
        let q0 = q_alpha[0];
        let beats = point.two_lr_hat >= settings.scale * q0 * q0;
        rows.push(GuardRow {
            lambda: point.lambda,
            s_hat: s,
            sqrt_two_lr: point.two_lr_hat.sqrt(),
            q_alpha,
            cv_error: point.cv_error,
            beats_gosf: beats,
        });
        if !stopped {
            if beats {
                last_beat = Some((point.lambda, s));
            } else if last_beat.is_some() {
                stopped = true;
            }
        }
    }

    let (s_fit, lambda_fit, all_spurious) = match last_beat {
        Some((lambda, s)) => (s, Some(lambda), false),
        None => (0, None, true),
    };
    Ok(GuardReport {
        rows,
        s_fit,
        lambda_fit,
        alphas: settings.alphas.clone(),
        all_spurious,
        scale: settings.scale,
        b: settings.b,
        seed: settings.seed,
        design_hash: design.content_hash(),
        bootstrap_builds: cache.len(),
    })
}

/// The constrained cross-validation variant: among rows that beat the
/// benchmark, the one with the smallest CV error. `None` when no row beats
/// or no CV errors are present.
pub fn constrained_cv_select(report: &GuardReport) -> Option<(f64, usize)> {
    report
        .rows
        .iter()
        .filter(|r| r.beats_gosf)
        .filter_map(|r| r.cv_error.map(|e| (e, r.lambda, r.s_hat)))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, lambda, s)| (lambda, s))
}

/// Renders the report as an aligned text table with one quantile column per
/// requested α (an empty list drops the quantile columns). The selected row
/// is marked with `*`.
pub fn render_table(report: &GuardReport, alphas: &[f64]) -> Result<String> {
    use std::fmt::Write;

    let mut columns: Vec<usize> = Vec::new();
    for &a in alphas {
        let idx = report
            .alphas
            .iter()
            .position(|&x| x == a)
            .ok_or_else(|| Error::Input(format!("alpha {a} was not evaluated in this report")))?;
        columns.push(idx);
    }
    let mut header: Vec<String> = vec!["lambda".into(), "s_hat".into(), "sqrt_2LR".into()];
    for &a in alphas {
        header.push(format!("q[{a}]"));
    }
    header.push("cv_error".into());
    header.push("fit".into());

    let mut table: Vec<Vec<String>> = vec![header];
    for row in &report.rows {
        let mut cells = vec![
            format!("{:.6}", row.lambda),
            row.s_hat.to_string(),
            format!("{:.4}", row.sqrt_two_lr),
        ];
        for &idx in &columns {
            cells.push(format!("{:.4}", row.q_alpha[idx]));
        }
        cells.push(
            row.cv_error
                .map(|e| format!("{e:.4}"))
                .unwrap_or_else(|| "-".into()),
        );
        let marker = if Some(row.lambda) == report.lambda_fit { "*" } else { "" };
        cells.push(marker.into());
        table.push(cells);
    }

    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &table {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            write!(out, "{:>width$}", cell, width = widths[c]).unwrap();
        }
        out.push('\n');
    }
    if report.all_spurious {
        out.push_str("all path points are spurious at the decision level\n");
    }
    Ok(out)
}
