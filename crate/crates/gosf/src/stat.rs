//! The goodness-of-spurious-fit statistic and its family scale factors.
//!
//! `2·LR_n(s, p) = 2·(L_n(0) − min_{‖β‖₀ ≤ s} L_n(β))` measures how much an
//! optimally chosen s-subset of covariates improves on the null fit. Its
//! reference law is the squared best s-subset score norm R₀²(s, p), up to a
//! family-specific scale: 1 for logistic/poisson, σ² for gaussian, and
//! 1/(2·f_ε(0)) for lad.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lamm::{lamm_minimize, LammConfig};
use crate::model::{baseline_value, Dataset, Family, LossModel};

/// The fitted statistic together with the scale linking it to the reference
/// law.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GosfStatistic {
    /// 2·LR_n(s, p), floored at zero.
    pub two_lr: f64,
    pub s: usize,
    pub p: usize,
    pub n: usize,
    /// Multiply the reference law R₀² by this to compare with `two_lr`.
    pub scale: f64,
    pub family: Family,
    /// False when the sparse solver hit its iteration cap.
    pub converged: bool,
}

/// Computes the statistic by solving the s-sparse problem.
pub fn gosf_statistic(
    model: &LossModel,
    data: &Dataset,
    s: usize,
    solver_config: &LammConfig,
) -> Result<GosfStatistic> {
    model.validate_response(data)?;
    let fit = lamm_minimize(model, data, s, solver_config)?;
    let baseline = baseline_value(model, data);
    let raw = 2.0 * (baseline - fit.objective);
    if raw < 0.0 {
        log::debug!("clamping a slightly negative likelihood ratio ({raw:.3e}) to zero");
    }
    Ok(GosfStatistic {
        two_lr: raw.max(0.0),
        s,
        p: data.p(),
        n: data.n(),
        scale: scale_factor(model, data)?,
        family: model.family,
        converged: fit.converged,
    })
}

/// Family scale factor: 1 (logistic, poisson), σ̂₀² or the pinned dispersion
/// (gaussian), 1/(2·f̂_ε(0)) (lad).
pub fn scale_factor(model: &LossModel, data: &Dataset) -> Result<f64> {
    match model.family {
        Family::Logistic | Family::Poisson => Ok(1.0),
        Family::Gaussian => match model.dispersion {
            Some(sigma2) => Ok(sigma2),
            None => sigma0_hat(data.y()),
        },
        Family::Lad => {
            let f0 = f_hat_zero(data.y())?;
            if !(f0 > 0.0) {
                return Err(Error::Solver(format!(
                    "kernel density estimate at zero is non-positive ({f0})"
                )));
            }
            Ok(1.0 / (2.0 * f0))
        }
    }
}

/// Plug-in variance σ̂₀² = n⁻¹ Σᵢ (yᵢ − ȳ)², divisor n.
pub fn sigma0_hat(y: &DVector<f64>) -> Result<f64> {
    let n = y.len();
    if n < 2 {
        return Err(Error::Input(format!("σ̂₀² needs n ≥ 2, got n = {n}")));
    }
    let mean = y.sum() / n as f64;
    let var = y.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        log::warn!("response is constant; σ̂₀² = 0 makes downstream quantiles degenerate");
    }
    Ok(var)
}

/// Kernel density estimate of the error density at zero:
/// `(nh)⁻¹ Σᵢ K(yᵢ/h)` with the Epanechnikov kernel
/// `K(u) = ¾(1 − u²)·1{|u| ≤ 1}` and bandwidth `h = 2.34·σ̂₀·n^{−1/5}`.
pub fn f_hat_zero(y: &DVector<f64>) -> Result<f64> {
    let n = y.len();
    if n < 2 {
        return Err(Error::Input(format!(
            "the density estimate needs n ≥ 2, got n = {n}"
        )));
    }
    let sigma0 = sigma0_hat(y)?.sqrt();
    if sigma0 == 0.0 {
        return Err(Error::Input(
            "σ̂₀ = 0 gives a zero bandwidth; the density estimate is undefined".into(),
        ));
    }
    let h = 2.34 * sigma0 * (n as f64).powf(-0.2);
    let sum: f64 = y
        .iter()
        .map(|&v| {
            let u = v / h;
            if u.abs() <= 1.0 {
                0.75 * (1.0 - u * u)
            } else {
                0.0
            }
        })
        .sum();
    Ok(sum / (n as f64 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::substream;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn sigma0_hat_examples() {
        assert_eq!(sigma0_hat(&DVector::from_vec(vec![0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(sigma0_hat(&DVector::from_vec(vec![1.0, -1.0])).unwrap(), 1.0);
        let v = sigma0_hat(&DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!((v - 1.25).abs() < 1e-12);
        assert!(sigma0_hat(&DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn kde_matches_direct_formula_on_tiny_spread() {
        let y = DVector::from_vec(vec![0.0, 0.0001, -0.0001]);
        let f = f_hat_zero(&y).unwrap();
        let sigma0 = sigma0_hat(&y).unwrap().sqrt();
        let h = 2.34 * sigma0 * 3.0_f64.powf(-0.2);
        let expect: f64 = y
            .iter()
            .map(|&v| {
                let u = v / h;
                if u.abs() <= 1.0 { 0.75 * (1.0 - u * u) } else { 0.0 }
            })
            .sum::<f64>()
            / (3.0 * h);
        assert!((f - expect).abs() < 1e-15);
        assert!(f > 0.0);
    }

    #[test]
    fn kde_recovers_standard_normal_density_at_zero() {
        // true value 1/√(2π) ≈ 0.3989
        let mut inside = 0;
        for seed in 0..50 {
            let mut rng = substream(3000 + seed, 0);
            let y = DVector::from_fn(1000, |_, _| rng.sample::<f64, _>(StandardNormal));
            let f = f_hat_zero(&y).unwrap();
            if (0.35..=0.45).contains(&f) {
                inside += 1;
            }
        }
        assert!(inside >= 48, "only {inside}/50 estimates landed in [0.35, 0.45]");
    }

    #[test]
    fn kde_recovers_uniform_density_at_zero() {
        for seed in 0..10 {
            let mut rng = substream(4000 + seed, 0);
            let y = DVector::from_fn(1000, |_, _| rng.random_range(-1.0..1.0));
            let f = f_hat_zero(&y).unwrap();
            assert!((0.45..=0.55).contains(&f), "seed {seed}: {f}");
        }
    }

    #[test]
    fn kde_rejects_constant_input() {
        assert!(f_hat_zero(&DVector::from_vec(vec![2.0, 2.0, 2.0])).is_err());
    }

    #[test]
    fn scale_factors_by_family() {
        let mut rng = substream(5, 0);
        let x = DMatrix::from_fn(12, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y01 = DVector::from_fn(12, |i, _| (i % 2) as f64);
        let logit = Dataset::new(x.clone(), y01).unwrap();
        assert_eq!(scale_factor(&LossModel::logistic(), &logit).unwrap(), 1.0);
        assert_eq!(scale_factor(&LossModel::poisson(), &logit).unwrap(), 1.0);

        let two = Dataset::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, -1.0])).unwrap();
        assert_eq!(scale_factor(&LossModel::gaussian(), &two).unwrap(), 1.0);
        let pinned = LossModel::gaussian().with_dispersion(4.0).unwrap();
        assert_eq!(scale_factor(&pinned, &two).unwrap(), 4.0);
    }

    #[test]
    fn lad_scale_near_normal_theory() {
        // 1/(2·φ(0)) ≈ 1.2533
        let mut rng = substream(6, 0);
        let x = DMatrix::from_fn(1000, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(1000, |_, _| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(x, y).unwrap();
        let scale = scale_factor(&LossModel::lad(), &data).unwrap();
        assert!((scale - 1.2533).abs() < 0.2, "scale = {scale}");
    }

    #[test]
    fn gosf_projection_identity_when_s_equals_p() {
        // gaussian, n > p = s, full rank: 2LR = yᵀX(XᵀX)⁻¹Xᵀy
        let mut rng = substream(7, 0);
        let n = 30;
        let p = 4;
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(x.clone(), y.clone()).unwrap();
        let stat = gosf_statistic(
            &LossModel::gaussian(),
            &data,
            p,
            &LammConfig::default(),
        )
        .unwrap();
        let theta = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
        let expect = y.norm_squared() - (&y - &x * theta).norm_squared();
        assert!((stat.two_lr - expect).abs() < 1e-8, "{} vs {expect}", stat.two_lr);
    }

    #[test]
    fn gosf_is_zero_when_the_solver_returns_zero() {
        // y = 0 makes every fit worthless; the statistic clamps at 0.
        let mut rng = substream(8, 0);
        let x = DMatrix::from_fn(10, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(x, DVector::zeros(10)).unwrap();
        let stat = gosf_statistic(
            &LossModel::gaussian(),
            &data,
            2,
            &LammConfig::default(),
        )
        .unwrap();
        assert_eq!(stat.two_lr, 0.0);
    }
}
