//! Guard a lasso path against spurious discoveries and pick ŝ_fit.
//!
//! Fits an ℓ1 path to a sparse logistic signal, cross-validates it, then
//! walks the path comparing each point's likelihood ratio with the bootstrap
//! benchmark for its own model size. The walk stops at the first point that
//! no longer beats fitting noise, and the last beating λ defines ŝ_fit.
//! Run with `cargo run --release --example path_guard`.

use gosf::guard::{constrained_cv_select, path_select, render_table, GuardSettings};
use gosf::lasso::{argmin_error, auto_grid, cross_validate, lambda_max, solve_path};
use gosf::model::{Dataset, Family, LossModel};
use gosf::seed::substream;
use gosf::simlab::{gen_design, BetaStar};
use gosf::stat::scale_factor;
use gosf::CovarianceSpec;
use nalgebra::DVector;
use rand::Rng;

fn main() -> gosf::Result<()> {
    let (n, p) = (200, 80);
    let design = gen_design(n, &CovarianceSpec::Ar1 { p, rho: 0.5 }, 51, true)?;
    let beta_star = BetaStar::FiveSpike.expand(p)?;
    let eta = design.matrix() * &beta_star;
    let mut rng = substream(52, 0);
    let y = DVector::from_fn(n, |i, _| {
        let pr = 1.0 / (1.0 + (-eta[i]).exp());
        if rng.random_bool(pr) {
            1.0
        } else {
            0.0
        }
    });
    let data = Dataset::from_design(design, y)?;
    let model = LossModel::new(Family::Logistic);

    let grid = auto_grid(lambda_max(&model, &data)?);
    let mut path = solve_path(&model, &data, &grid)?;
    let errors = cross_validate(&model, &data, 5, &grid, 53)?;
    for (point, &err) in path.iter_mut().zip(errors.iter()) {
        point.cv_error = Some(err);
    }
    let cv_idx = argmin_error(&errors);
    println!(
        "cross-validation picks λ = {:.4} with ŝ_cv = {}",
        grid[cv_idx], path[cv_idx].support_size
    );

    let settings = GuardSettings {
        alphas: vec![0.1, 0.05],
        b: 500,
        seed: 54,
        workers: 0,
        scale: scale_factor(&model, &data)?,
        solver: Default::default(),
        evaluate_full_path: false,
    };
    let report = path_select(&path, data.design(), &settings)?;
    println!();
    print!("{}", render_table(&report, &[0.1, 0.05])?);
    println!();
    println!(
        "ŝ_fit = {} at λ = {:?} (true support size is 5)",
        report.s_fit, report.lambda_fit
    );
    if let Some((lambda, s)) = constrained_cv_select(&report) {
        println!("best cross-validated model among rows beating the benchmark: λ = {lambda:.4}, s = {s}");
    }
    Ok(())
}
