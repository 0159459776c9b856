//! Multiplier-bootstrap simulation of the reference law.
//!
//! With multipliers e ~ N(0, I_n), each bootstrap draw is
//! `R_n²(s, p) = ‖e‖² − min_{‖β‖₀ ≤ s} ‖e − Xβ‖²`, the best s-subset fit of
//! pure noise to the observed design, computed with the same sparse solver
//! used for the statistic itself. Sorted draws give the benchmark quantiles
//! `q_{n,α}(s, p)`. The module also carries direct simulation oracles for the
//! population law R₀(s, p) used in testing and in the small-p regime.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lamm::{lamm_minimize, LammConfig};
use crate::model::{Dataset, Design, LossModel};
use crate::seed::substream;

/// Covariance structure for simulated designs and reference-law oracles.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CovarianceSpec {
    Identity { p: usize },
    /// Σⱼₖ = ρ^|j−k| with ρ ∈ (0, 1).
    Ar1 { p: usize, rho: f64 },
    /// Σⱼₖ = ((|j−k|+1)^{2ρ} + (|j−k|−1 in modulus)^{2ρ} − 2|j−k|^{2ρ})/2
    /// with ρ ∈ (½, 1); a fractional-noise style long-memory structure.
    LongMemory { p: usize, rho: f64 },
    Explicit { matrix: DMatrix<f64> },
}

impl CovarianceSpec {
    pub fn p(&self) -> usize {
        match self {
            CovarianceSpec::Identity { p }
            | CovarianceSpec::Ar1 { p, .. }
            | CovarianceSpec::LongMemory { p, .. } => *p,
            CovarianceSpec::Explicit { matrix } => matrix.nrows(),
        }
    }

    /// Materializes the covariance matrix, symmetrized, and verifies positive
    /// definiteness by attempting a Cholesky factorization.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let sigma = match self {
            CovarianceSpec::Identity { p } => {
                if *p == 0 {
                    return Err(Error::Input("covariance dimension must be positive".into()));
                }
                DMatrix::identity(*p, *p)
            }
            CovarianceSpec::Ar1 { p, rho } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::Input(format!(
                        "ar1 correlation must lie in (0, 1), got {rho}"
                    )));
                }
                DMatrix::from_fn(*p, *p, |j, k| rho.powi((j as i64 - k as i64).unsigned_abs() as i32))
            }
            CovarianceSpec::LongMemory { p, rho } => {
                if !(*rho > 0.5 && *rho < 1.0) {
                    return Err(Error::Input(format!(
                        "long-memory exponent must lie in (0.5, 1), got {rho}"
                    )));
                }
                DMatrix::from_fn(*p, *p, |j, k| {
                    let d = (j as i64 - k as i64).unsigned_abs() as f64;
                    let two_rho = 2.0 * rho;
                    (((d + 1.0).abs()).powf(two_rho) + ((d - 1.0).abs()).powf(two_rho)
                        - 2.0 * d.powf(two_rho))
                        / 2.0
                })
            }
            CovarianceSpec::Explicit { matrix } => {
                if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
                    return Err(Error::Input("explicit covariance must be square".into()));
                }
                matrix.clone()
            }
        };
        let sym = (&sigma + sigma.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::Input(format!(
                "covariance is not positive definite ({})",
                match self {
                    CovarianceSpec::Ar1 { rho, .. } => format!("ar1, rho = {rho}"),
                    CovarianceSpec::LongMemory { rho, .. } => format!("long-memory, rho = {rho}"),
                    _ => "explicit or identity".to_string(),
                }
            )));
        }
        Ok(sym)
    }
}

/// Sorted multiplier-bootstrap samples of R_n²(s, p).
#[derive(Clone, Debug, Serialize)]
pub struct BootstrapDistribution {
    samples: Vec<f64>,
    pub s: usize,
    pub p: usize,
    pub n: usize,
    pub b: usize,
    pub seed: u64,
    pub solver_config: LammConfig,
    /// Samples redrawn after solver non-convergence.
    pub redraws: usize,
    pub design_hash: u64,
}

impl BootstrapDistribution {
    /// Wraps externally produced R² samples (sorts and validates them).
    pub fn from_samples(mut samples: Vec<f64>, s: usize, p: usize, n: usize, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("a bootstrap distribution needs at least one sample".into()));
        }
        if samples.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input("bootstrap samples must be finite and nonnegative".into()));
        }
        samples.sort_unstable_by(f64::total_cmp);
        let b = samples.len();
        Ok(BootstrapDistribution {
            samples,
            s,
            p,
            n,
            b,
            seed,
            solver_config: LammConfig::default(),
            redraws: 0,
            design_hash: 0,
        })
    }

    /// Sorted R² samples, ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Upper-α quantile on the R_n scale: the square root of the order
    /// statistic at rank ⌈(1−α)·B⌉.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        Ok(self.quantile_squared(alpha)?.sqrt())
    }

    /// Upper-α quantile on the R_n² scale.
    pub fn quantile_squared(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Input(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if alpha >= 0.01 && self.b < 100 {
            return Err(Error::Input(format!(
                "B = {} is too small to resolve the upper {alpha}-quantile (need B ≥ 100)",
                self.b
            )));
        }
        // ⌈(1−α)B⌉ computed as B − ⌊αB⌋ with a guard against rounding of αB.
        let down = ((alpha * self.b as f64) + 1e-9).floor() as usize;
        let rank = self.b - down.min(self.b);
        if rank < 1 || rank > self.b {
            return Err(Error::Input(format!(
                "quantile rank {rank} out of range for B = {}",
                self.b
            )));
        }
        Ok(self.samples[rank - 1])
    }
}

/// One multiplier-bootstrap draw of R_n²(s, p): draws e ~ N(0, I_n) from
/// `rng`, solves the gaussian best-subset problem with response e, and
/// returns ‖e‖² − ‖e − Xβ̂(s)‖², floored at zero.
pub fn multiplier_bootstrap_sample(
    design: &Design,
    s: usize,
    solver_config: &LammConfig,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    sample_with_redraws(design, s, solver_config, rng).map(|(v, _)| v)
}

fn sample_with_redraws(
    design: &Design,
    s: usize,
    solver_config: &LammConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, usize)> {
    const MAX_REDRAWS: usize = 50;
    let n = design.n();
    let model = LossModel::gaussian();
    for attempt in 0..=MAX_REDRAWS {
        let e = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::from_design(design.clone(), e.clone())?;
        let fit = lamm_minimize(&model, &data, s, solver_config)?;
        if fit.converged {
            // gaussian loss is ½‖e − Xβ‖², so R² = ‖e‖² − 2·objective
            let r_sq = (e.norm_squared() - 2.0 * fit.objective).max(0.0);
            return Ok((r_sq, attempt));
        }
    }
    Err(Error::Bootstrap(format!(
        "solver failed to converge in {MAX_REDRAWS} consecutive redraws"
    )))
}

/// Runs `f` on a dedicated pool of `workers` threads, or inline on the
/// current rayon context when `workers` is zero.
pub(crate) fn with_worker_pool<T: Send>(
    workers: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    if workers == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Solver(format!("could not build worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Draws `b` independent bootstrap samples, each from a counter-derived
/// substream of `seed`, and sorts them. The result does not depend on
/// `workers`.
pub fn bootstrap_distribution(
    design: &Design,
    s: usize,
    b: usize,
    solver_config: &LammConfig,
    seed: u64,
    workers: usize,
) -> Result<BootstrapDistribution> {
    if b == 0 {
        return Err(Error::Input("B must be at least 1".into()));
    }
    if s == 0 || s > design.n().min(design.p()) {
        return Err(Error::Input(format!(
            "sparsity level {s} out of range for n = {}, p = {}",
            design.n(),
            design.p()
        )));
    }
    let draws: Vec<Result<(f64, usize)>> = with_worker_pool(workers, || {
        (0..b as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(seed, i);
                sample_with_redraws(design, s, solver_config, &mut rng)
            })
            .collect()
    })?;
    let mut samples = Vec::with_capacity(b);
    let mut redraws = 0usize;
    for d in draws {
        let (v, r) = d?;
        samples.push(v);
        redraws += r;
    }
    if redraws * 100 > b {
        return Err(Error::Bootstrap(format!(
            "{redraws} redraws over {b} samples exceeds the 1% budget"
        )));
    }
    samples.sort_unstable_by(f64::total_cmp);
    Ok(BootstrapDistribution {
        samples,
        s,
        p: design.p(),
        n: design.n(),
        b,
        seed,
        solver_config: *solver_config,
        redraws,
        design_hash: design.content_hash(),
    })
}

/// One draw of the isotropic reference law R₀²(s, p): the sum of the `s`
/// largest among `p` independent χ₁² variables.
pub fn oracle_r0_isotropic(p: usize, s: usize, rng: &mut ChaCha8Rng) -> f64 {
    assert!(s >= 1 && s <= p, "need 1 ≤ s ≤ p");
    let mut sq: Vec<f64> = (0..p)
        .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
        .collect();
    sq.sort_unstable_by(|a, b| b.total_cmp(a));
    sq[..s].iter().sum()
}

fn for_each_subset(p: usize, s: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        f(&idx);
        // advance the combination
        let mut i = s;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + p - s {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn principal_submatrix(sigma: &DMatrix<f64>, subset: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(subset.len(), subset.len(), |a, b| sigma[(subset[a], subset[b])])
}

/// One draw of the general reference law R₀²(s, p) by exhaustive subset
/// enumeration: draws G ~ N(0, Σ) and returns max over s-subsets S of
/// G_Sᵀ Σ_SS⁻¹ G_S. Restricted to p ≤ 15.
pub fn oracle_r0_general(spec: &CovarianceSpec, s: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let p = spec.p();
    if p > 15 {
        return Err(Error::Input(format!(
            "the exhaustive oracle is limited to p ≤ 15, got p = {p}"
        )));
    }
    if s == 0 || s > p {
        return Err(Error::Input(format!("need 1 ≤ s ≤ p, got s = {s}, p = {p}")));
    }
    let sigma = spec.to_matrix()?;
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Input("covariance is singular".into()))?;
    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let g = chol.l() * z;
    let mut best = f64::NEG_INFINITY;
    for_each_subset(p, s, |subset| {
        let sub = principal_submatrix(&sigma, subset);
        let gs = DVector::from_iterator(s, subset.iter().map(|&j| g[j]));
        let solved = sub
            .cholesky()
            .expect("principal submatrices of a PD matrix are PD")
            .solve(&gs);
        best = best.max(gs.dot(&solved));
    });
    Ok(best)
}

/// s-sparse condition number γ_s = √(λ_max(s)/λ_min(s)), computed by
/// enumerating the extreme eigenvalues of all s×s principal submatrices.
/// A small-p diagnostic; restricted to p ≤ 15.
pub fn sparse_condition_number(spec: &CovarianceSpec, s: usize) -> Result<f64> {
    let p = spec.p();
    if p > 15 {
        return Err(Error::Input(format!(
            "the exhaustive diagnostic is limited to p ≤ 15, got p = {p}"
        )));
    }
    if s == 0 || s > p {
        return Err(Error::Input(format!("need 1 ≤ s ≤ p, got s = {s}, p = {p}")));
    }
    let sigma = spec.to_matrix()?;
    let mut lambda_max = f64::NEG_INFINITY;
    let mut lambda_min = f64::INFINITY;
    for_each_subset(p, s, |subset| {
        let sub = principal_submatrix(&sigma, subset);
        let eig = sub.symmetric_eigen();
        for &v in eig.eigenvalues.iter() {
            lambda_max = lambda_max.max(v);
            lambda_min = lambda_min.min(v);
        }
    });
    if lambda_min <= 0.0 {
        return Err(Error::Input(format!(
            "smallest s-sparse eigenvalue is non-positive ({lambda_min})"
        )));
    }
    Ok((lambda_max / lambda_min).sqrt())
}

/// Plug-in check of the bootstrap validity condition: s·log(p·n)/n^{1/5}.
/// Reported as a diagnostic only; small values support the approximation.
pub fn validity_diagnostic(n: usize, p: usize, s: usize) -> f64 {
    s as f64 * ((p as f64) * (n as f64)).ln() / (n as f64).powf(0.2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_design(n: usize, p: usize, seed: u64) -> Design {
        let mut rng = substream(seed, 0);
        Design::new(DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))).unwrap()
    }

    #[test]
    fn ar1_matrix_matches_direct_formula() {
        let sigma = CovarianceSpec::Ar1 { p: 3, rho: 0.8 }.to_matrix().unwrap();
        let expect = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.8, 0.64, 0.8, 1.0, 0.8, 0.64, 0.8, 1.0],
        );
        assert!((sigma - expect).amax() < 1e-15);
    }

    #[test]
    fn long_memory_entry_and_unit_diagonal() {
        let sigma = CovarianceSpec::LongMemory { p: 3, rho: 0.8 }.to_matrix().unwrap();
        let expect_13 = (3.0_f64.powf(1.6) + 1.0 - 2.0 * 2.0_f64.powf(1.6)) / 2.0;
        assert!((sigma[(0, 2)] - expect_13).abs() < 1e-12);
        for j in 0..3 {
            assert!((sigma[(j, j)] - 1.0).abs() < 1e-12);
        }
        assert!((sigma.clone() - sigma.transpose()).amax() == 0.0);
    }

    #[test]
    fn invalid_covariances_are_rejected() {
        assert!(CovarianceSpec::Ar1 { p: 3, rho: 1.2 }.to_matrix().is_err());
        assert!(CovarianceSpec::LongMemory { p: 3, rho: 0.4 }.to_matrix().is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(CovarianceSpec::Explicit { matrix: bad }.to_matrix().is_err());
    }

    #[test]
    fn full_subset_sample_is_the_projection_norm() {
        // s = p ≤ n, full rank: the draw equals ‖P_X e‖².
        let design = random_design(25, 3, 1);
        let mut rng = substream(11, 0);
        let config = LammConfig::default();
        // Reproduce the internal e draw with the same stream.
        let mut rng_copy = rng.clone();
        let e = DVector::from_fn(25, |_, _| rng_copy.sample::<f64, _>(StandardNormal));
        let sample = multiplier_bootstrap_sample(&design, 3, &config, &mut rng).unwrap();
        let x = design.matrix().clone();
        let theta = x.clone().svd(true, true).solve(&e, 1e-12).unwrap();
        let expect = e.norm_squared() - (&e - &x * theta).norm_squared();
        assert!((sample - expect).abs() < 1e-8, "{sample} vs {expect}");
    }

    #[test]
    fn single_column_sample_matches_the_scalar_identity() {
        let mut rng0 = substream(21, 0);
        let n = 40;
        let mut col: Vec<f64> = (0..n).map(|_| rng0.sample::<f64, _>(StandardNormal)).collect();
        let m2 = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        col.iter_mut().for_each(|v| *v /= m2);
        let design = Design::new(DMatrix::from_column_slice(n, 1, &col)).unwrap();

        let mut rng = substream(22, 0);
        let mut rng_copy = rng.clone();
        let e = DVector::from_fn(n, |_, _| rng_copy.sample::<f64, _>(StandardNormal));
        let sample =
            multiplier_bootstrap_sample(&design, 1, &LammConfig::default(), &mut rng).unwrap();
        let score = e
            .iter()
            .zip(col.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n as f64).sqrt();
        assert!((sample - score * score).abs() < 1e-8);
    }

    #[test]
    fn distribution_is_deterministic_across_worker_counts() {
        let design = random_design(30, 6, 2);
        let config = LammConfig::default();
        let a = bootstrap_distribution(&design, 2, 24, &config, 5, 1).unwrap();
        let b = bootstrap_distribution(&design, 2, 24, &config, 5, 4).unwrap();
        assert_eq!(a.samples(), b.samples());

        let single = bootstrap_distribution(&design, 2, 1, &config, 5, 1).unwrap();
        let mut rng = substream(5, 0);
        let direct = multiplier_bootstrap_sample(&design, 2, &config, &mut rng).unwrap();
        assert_eq!(single.samples()[0], direct);
    }

    #[test]
    fn quantile_order_statistic_arithmetic() {
        let squares: Vec<f64> = (1..=10).map(|k| (k * k) as f64).collect();
        let mut dist = BootstrapDistribution::from_samples(squares, 2, 10, 50, 0).unwrap();
        dist.b = 10;
        // bypass the resolution guard by querying directly at small alpha…
        // resolution guard applies for alpha ≥ 0.01 when B < 100, so check it:
        assert!(dist.quantile(0.1).is_err());
        // …and verify the arithmetic on a padded version instead.
        let padded: Vec<f64> = (1..=10)
            .flat_map(|k| std::iter::repeat((k * k) as f64).take(10))
            .collect();
        let dist = BootstrapDistribution::from_samples(padded, 2, 10, 50, 0).unwrap();
        assert_eq!(dist.quantile(0.1).unwrap(), 9.0);
        assert_eq!(dist.quantile_squared(0.1).unwrap(), 81.0);
        assert_eq!(dist.quantile(0.5).unwrap(), 5.0);
    }

    #[test]
    fn small_alpha_requires_enough_samples() {
        let dist =
            BootstrapDistribution::from_samples((0..100).map(f64::from).collect(), 1, 5, 50, 0)
                .unwrap();
        assert!(dist.quantile(0.1).is_ok());
        assert!(dist.quantile(0.0).is_err());
        assert!(dist.quantile(1.0).is_err());
    }

    proptest! {
        #[test]
        fn quantile_is_non_increasing_in_alpha(seed in 0u64..40) {
            let mut rng = substream(seed, 9);
            let samples: Vec<f64> = (0..200).map(|_| rng.random_range(0.0..50.0)).collect();
            let dist = BootstrapDistribution::from_samples(samples, 1, 4, 30, 0).unwrap();
            let alphas = [0.01, 0.05, 0.1, 0.2, 0.5, 0.9];
            let qs: Vec<f64> = alphas.iter().map(|&a| dist.quantile(a).unwrap()).collect();
            for w in qs.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }
    }

    #[test]
    fn isotropic_oracle_special_cases() {
        let mut rng = substream(31, 0);
        // s = p: sum of all draws (χ²_p); replicate the stream to verify.
        let mut rng_copy = rng.clone();
        let total: f64 = (0..6)
            .map(|_| rng_copy.sample::<f64, _>(StandardNormal).powi(2))
            .sum();
        let draw = oracle_r0_isotropic(6, 6, &mut rng);
        assert!((draw - total).abs() < 1e-12);

        let mut rng = substream(32, 0);
        let mut rng_copy = rng.clone();
        let z: f64 = rng_copy.sample(StandardNormal);
        assert!((oracle_r0_isotropic(1, 1, &mut rng) - z * z).abs() < 1e-12);
    }

    #[test]
    fn isotropic_oracle_mean_is_seed_stable() {
        let draws = |seed: u64| -> f64 {
            let mut rng = substream(seed, 0);
            (0..20_000).map(|_| oracle_r0_isotropic(20, 3, &mut rng)).sum::<f64>() / 20_000.0
        };
        let a = draws(100);
        let b = draws(200);
        assert!((a - b).abs() / a < 0.02, "{a} vs {b}");
    }

    #[test]
    fn general_oracle_reduces_to_isotropic_at_identity() {
        let spec = CovarianceSpec::Identity { p: 6 };
        let mut rng = substream(41, 0);
        let mut iso = substream(42, 0);
        let a: Vec<f64> = (0..4000).map(|_| oracle_r0_general(&spec, 2, &mut rng).unwrap()).collect();
        let b: Vec<f64> = (0..4000).map(|_| oracle_r0_isotropic(6, 2, &mut iso)).collect();
        let ks = crate::simlab::ks_distance(&a, &b).unwrap();
        assert!(ks <= 0.035, "ks = {ks}");
    }

    #[test]
    fn general_oracle_whitening_identity_at_s_equals_p() {
        // s = p: GᵀΣ⁻¹G ~ χ²_p independent of Σ.
        let spec = CovarianceSpec::Ar1 { p: 4, rho: 0.6 };
        let sigma = spec.to_matrix().unwrap();
        let mut rng = substream(43, 0);
        let mut rng_copy = rng.clone();
        let chol = sigma.clone().cholesky().unwrap();
        let z = DVector::from_fn(4, |_, _| rng_copy.sample::<f64, _>(StandardNormal));
        let g = chol.l() * z.clone();
        let direct = g.dot(&sigma.clone().cholesky().unwrap().solve(&g));
        let draw = oracle_r0_general(&spec, 4, &mut rng).unwrap();
        assert!((draw - direct).abs() < 1e-10);
        // and equals ‖z‖² by whitening
        assert!((draw - z.norm_squared()).abs() < 1e-8);
    }

    #[test]
    fn general_oracle_matches_independent_quadratic_enumeration() {
        let spec = CovarianceSpec::Ar1 { p: 6, rho: 0.8 };
        let sigma = spec.to_matrix().unwrap();
        let mut rng = substream(44, 0);
        let mut rng_copy = rng.clone();
        let chol = sigma.clone().cholesky().unwrap();
        let z = DVector::from_fn(6, |_, _| rng_copy.sample::<f64, _>(StandardNormal));
        let g = chol.l() * z;
        // independent route: explicit 2×2 inverses
        let mut best = f64::NEG_INFINITY;
        for j in 0..6 {
            for k in (j + 1)..6 {
                let (a, b, c) = (sigma[(j, j)], sigma[(j, k)], sigma[(k, k)]);
                let det = a * c - b * b;
                let (g1, g2) = (g[j], g[k]);
                let q = (c * g1 * g1 - 2.0 * b * g1 * g2 + a * g2 * g2) / det;
                best = best.max(q);
            }
        }
        let draw = oracle_r0_general(&spec, 2, &mut rng).unwrap();
        assert!((draw - best).abs() < 1e-10);
    }

    #[test]
    fn sparse_condition_number_cases() {
        let id = CovarianceSpec::Identity { p: 5 };
        for s in 1..=5 {
            assert!((sparse_condition_number(&id, s).unwrap() - 1.0).abs() < 1e-12);
        }
        let diag = CovarianceSpec::Explicit {
            matrix: DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])),
        };
        assert!((sparse_condition_number(&diag, 1).unwrap() - 2.0).abs() < 1e-12);

        // AR1(0.8), p = 6, s = 2: extremes over the fifteen 2×2 submatrices.
        let spec = CovarianceSpec::Ar1 { p: 6, rho: 0.8 };
        let sigma = spec.to_matrix().unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..6 {
            for k in (j + 1)..6 {
                let b = sigma[(j, k)];
                // eigenvalues of [[1, b], [b, 1]] are 1 ± b
                lo = lo.min(1.0 - b.abs());
                hi = hi.max(1.0 + b.abs());
            }
        }
        let expect = (hi / lo).sqrt();
        assert!((sparse_condition_number(&spec, 2).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut count = 0;
        for_each_subset(6, 3, |_| count += 1);
        assert_eq!(count, 20);
        let mut count = 0;
        for_each_subset(5, 5, |s| {
            assert_eq!(s, &[0, 1, 2, 3, 4]);
            count += 1;
        });
        assert_eq!(count, 1);
        let mut seen = Vec::new();
        for_each_subset(4, 1, |s| seen.push(s[0]));
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }
}
