//! How well can pure noise be fitted in high dimensions?
//!
//! When a response is regressed on an optimally chosen s-subset out of p
//! candidate covariates, the fit can look impressive even when response and
//! covariates are independent. This crate measures that effect and turns it
//! into a benchmark for variable-selection discoveries:
//!
//! - [`stat::gosf_statistic`] computes the generalized likelihood-ratio
//!   measure `2·LR_n(s, p)` of the best s-sparse fit for gaussian, logistic,
//!   poisson and least-absolute-deviation losses, solved by the adaptive
//!   majorize-minimize routine in [`lamm`] with upper/lower optimality
//!   certificates.
//! - [`bootstrap`] simulates the null reference law by the multiplier
//!   bootstrap and exposes its upper quantiles `q_{n,α}(s, p)`.
//! - [`guard`] compares fitted models against those quantiles, walks a
//!   regularization path, and stops it at the largest model size that still
//!   beats the noise benchmark.
//! - [`lasso`] supplies ℓ1 paths with cross-validation; [`simlab`] runs
//!   reproducible null, power, and calibration experiments.
//!
//! See the crate examples for end-to-end walkthroughs of each capability.

pub mod bootstrap;
pub mod error;
pub mod guard;
pub mod io;
pub mod lamm;
pub mod lasso;
pub mod model;
pub mod seed;
pub mod simlab;
pub mod stat;

pub use bootstrap::{
    bootstrap_distribution, multiplier_bootstrap_sample, oracle_r0_general, oracle_r0_isotropic,
    sparse_condition_number, BootstrapDistribution, CovarianceSpec,
};
pub use error::{Error, Result};
pub use guard::{path_select, render_table, spurious_test, GuardDecision, GuardReport, GuardSettings};
pub use lamm::{
    default_radius, forward_stepwise_init, hard_threshold_top_s, lamm_minimize, lower_certificate,
    LammConfig, SparseFit,
};
pub use lasso::{auto_grid, cross_validate, lambda_max, solve_path, PathPoint};
pub use model::{Dataset, Design, Family, LossModel};
pub use simlab::{
    gen_design, ks_distance, make_covariance, run_null_calibration, run_null_experiment,
    run_power_experiment, BetaStar, SimConfig, SimResult,
};
pub use stat::{f_hat_zero, gosf_statistic, scale_factor, sigma0_hat, GosfStatistic};
