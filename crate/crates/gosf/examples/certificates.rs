//! Bracket the best-subset minimum with upper and lower certificates.
//!
//! The sparse solver's output is feasible, so its objective bounds the true
//! constrained minimum from above; the ℓ1-ball convex relaxation bounds it
//! from below. A tight interval certifies the solve.
//! Run with `cargo run --example certificates`.

use gosf::lamm::{default_radius, lamm_minimize, lower_certificate, LammConfig};
use gosf::lasso::{auto_grid, lambda_max, solve_path};
use gosf::model::{Dataset, LossModel};
use gosf::seed::substream;
use gosf::simlab::gen_design;
use gosf::CovarianceSpec;
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> gosf::Result<()> {
    let (n, p, s) = (120, 15, 3);
    let design = gen_design(n, &CovarianceSpec::Identity { p }, 33, true)?;
    let mut rng = substream(34, 0);
    let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let data = Dataset::from_design(design, y)?;
    let model = LossModel::gaussian();

    let fit = lamm_minimize(&model, &data, s, &LammConfig::default())?;
    println!("s = {s}: solver objective (upper certificate) = {:.6}", fit.upper_certificate);
    println!("support: {:?}, iterations: {}", fit.support, fit.iterations);

    // Radius heuristic: twice the ℓ1 norm of the path solution of size s.
    let lmax = lambda_max(&model, &data)?;
    let path = solve_path(&model, &data, &auto_grid(lmax))?;
    let radius = default_radius(&path, s)?;
    let lower = lower_certificate(&model, &data, radius)?;
    println!("ℓ1 radius = {radius:.4}");
    println!("lower certificate = {:.6} (converged: {})", lower.value, lower.converged);
    println!();
    println!(
        "the constrained minimum lies in [{:.6}, {:.6}] (width {:.2e})",
        lower.value,
        fit.upper_certificate,
        fit.upper_certificate - lower.value
    );
    Ok(())
}
