//! Loss families and datasets.
//!
//! Four loss families are supported: the generalized-linear-model losses
//! `L_n(β) = Σᵢ { b(xᵢᵀβ) − yᵢ·xᵢᵀβ }` for gaussian, logistic and poisson
//! responses, and the least-absolute-deviation loss `L_n(β) = Σᵢ |yᵢ − xᵢᵀβ|`.
//! The gaussian family is carried in the equivalent `½‖y − Xβ‖²` form, which
//! differs from the cumulant form only by the constant `½‖y‖²`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear predictors beyond this magnitude are clamped before `exp` in the
/// poisson family so the loss stays finite on adversarial inputs.
pub const POISSON_LINK_CLAMP: f64 = 700.0;

static POISSON_CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of poisson linear predictors clamped to `±POISSON_LINK_CLAMP` since
/// the last reset.
pub fn poisson_clamp_count() -> u64 {
    POISSON_CLAMP_EVENTS.load(Ordering::Relaxed)
}

/// Resets the poisson clamp counter.
pub fn reset_poisson_clamp_count() {
    POISSON_CLAMP_EVENTS.store(0, Ordering::Relaxed);
}

/// Loss family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Logistic,
    Poisson,
    Lad,
}

impl Family {
    /// True for the three canonical-link GLM families (everything but lad).
    pub fn is_glm(self) -> bool {
        !matches!(self, Family::Lad)
    }

    /// Cumulant function b(u). Defined for GLM families only.
    pub fn b(self, u: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * u * u,
            // log(1 + e^u) evaluated in an overflow-safe form
            Family::Logistic => u.max(0.0) + (-u.abs()).exp().ln_1p(),
            Family::Poisson => clamped_exp(u),
            Family::Lad => panic!("cumulant b(u) is undefined for the lad family"),
        }
    }

    /// First derivative b'(u).
    pub fn b_prime(self, u: f64) -> f64 {
        match self {
            Family::Gaussian => u,
            Family::Logistic => sigmoid(u),
            Family::Poisson => clamped_exp(u),
            Family::Lad => panic!("b'(u) is undefined for the lad family"),
        }
    }

    /// Second derivative b''(u); nonnegative by convexity.
    pub fn b_double_prime(self, u: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Logistic => {
                let s = sigmoid(u);
                s * (1.0 - s)
            }
            Family::Poisson => clamped_exp(u),
            Family::Lad => panic!("b''(u) is undefined for the lad family"),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Family::Gaussian => "gaussian",
            Family::Logistic => "logistic",
            Family::Poisson => "poisson",
            Family::Lad => "lad",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Family::Gaussian),
            "logistic" => Ok(Family::Logistic),
            "poisson" => Ok(Family::Poisson),
            "lad" => Ok(Family::Lad),
            other => Err(Error::Input(format!(
                "unknown family '{other}' (expected gaussian|logistic|poisson|lad)"
            ))),
        }
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn clamped_exp(u: f64) -> f64 {
    if u.abs() > POISSON_LINK_CLAMP {
        POISSON_CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        u.clamp(-POISSON_LINK_CLAMP, POISSON_LINK_CLAMP).exp()
    } else {
        u.exp()
    }
}

/// A loss family plus its dispersion handling.
///
/// The dispersion φ is fixed to 1 for logistic, poisson and lad. For the
/// gaussian family the variance σ² enters only through the downstream scale
/// factor: by default it is estimated by the plug-in `σ̂₀²`, and
/// [`LossModel::with_dispersion`] pins it to a user-supplied value instead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub family: Family,
    /// `Some(σ²)` pins the gaussian dispersion; `None` defers to the plug-in
    /// estimate. Ignored for the unit-dispersion families.
    pub dispersion: Option<f64>,
}

impl LossModel {
    pub fn new(family: Family) -> Self {
        LossModel {
            family,
            dispersion: None,
        }
    }

    pub fn gaussian() -> Self {
        Self::new(Family::Gaussian)
    }

    pub fn logistic() -> Self {
        Self::new(Family::Logistic)
    }

    pub fn poisson() -> Self {
        Self::new(Family::Poisson)
    }

    pub fn lad() -> Self {
        Self::new(Family::Lad)
    }

    /// Pins the gaussian σ² to a known value.
    pub fn with_dispersion(mut self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) {
            return Err(Error::Input(format!(
                "dispersion must be positive, got {sigma2}"
            )));
        }
        self.dispersion = Some(sigma2);
        Ok(self)
    }

    /// Checks the response vector against family constraints.
    pub fn validate_response(&self, data: &Dataset) -> Result<()> {
        match self.family {
            Family::Logistic => {
                for (i, &v) in data.y().iter().enumerate() {
                    if v != 0.0 && v != 1.0 {
                        return Err(Error::Input(format!(
                            "logistic response must be 0/1; row {} has {v}",
                            i + 1
                        )));
                    }
                }
            }
            Family::Poisson => {
                for (i, &v) in data.y().iter().enumerate() {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::Input(format!(
                            "poisson response must be a nonnegative integer; row {} has {v}",
                            i + 1
                        )));
                    }
                }
            }
            Family::Gaussian | Family::Lad => {}
        }
        Ok(())
    }
}

/// An immutable, cheaply shareable design matrix.
#[derive(Clone, Debug)]
pub struct Design(Arc<DMatrix<f64>>);

impl Design {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::Input("design matrix must be non-empty".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(
                "design matrix contains a non-finite value".into(),
            ));
        }
        Ok(Design(Arc::new(x)))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn p(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Sample second moment (1/n)Σᵢ xᵢⱼ² of each column.
    pub fn column_second_moments(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.p())
            .map(|j| self.0.column(j).norm_squared() / n)
            .collect()
    }

    /// Rescales every column to unit sample second moment.
    pub fn standardized(&self) -> Result<Design> {
        let mut x = (*self.0).clone();
        standardize_columns(&mut x)?;
        Ok(Design(Arc::new(x)))
    }

    /// Order-dependent hash of the matrix contents; used as a cache key.
    pub fn content_hash(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.nrows().hash(&mut h);
        self.0.ncols().hash(&mut h);
        for v in self.0.iter() {
            v.to_bits().hash(&mut h);
        }
        h.finish()
    }
}

/// Rescales each column of `x` to satisfy (1/n)Σᵢ xᵢⱼ² = 1.
pub fn standardize_columns(x: &mut DMatrix<f64>) -> Result<Vec<f64>> {
    let n = x.nrows() as f64;
    let mut scales = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let m2 = x.column(j).norm_squared() / n;
        if m2 <= 0.0 {
            return Err(Error::Input(format!(
                "column {} is identically zero and cannot be standardized",
                j + 1
            )));
        }
        let scale = 1.0 / m2.sqrt();
        x.column_mut(j).scale_mut(scale);
        scales.push(scale);
    }
    Ok(scales)
}

/// A design matrix paired with a response vector.
#[derive(Clone, Debug)]
pub struct Dataset {
    design: Design,
    y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        Self::from_design(Design::new(x)?, y)
    }

    pub fn from_design(design: Design, y: DVector<f64>) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::Input(format!(
                "response length {} does not match design rows {}",
                y.len(),
                design.n()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("response contains a non-finite value".into()));
        }
        Ok(Dataset { design, y })
    }

    /// Same design, different response. The design storage is shared.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Dataset> {
        Dataset::from_design(self.design.clone(), y)
    }

    /// Returns a copy with columns rescaled to unit sample second moment.
    pub fn standardized(&self) -> Result<Dataset> {
        Dataset::from_design(self.design.standardized()?, self.y.clone())
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn p(&self) -> usize {
        self.design.p()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.design.matrix()
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn design(&self) -> &Design {
        &self.design
    }
}

fn check_beta_len(data: &Dataset, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != data.p() {
        return Err(Error::Input(format!(
            "coefficient length {} does not match p = {}",
            beta.len(),
            data.p()
        )));
    }
    Ok(())
}

/// Computes Xβ, iterating only over the nonzero coefficients.
pub(crate) fn linear_predictor(data: &Dataset, beta: &DVector<f64>) -> DVector<f64> {
    let mut u = DVector::zeros(data.n());
    for (j, &bj) in beta.iter().enumerate() {
        if bj != 0.0 {
            u.axpy(bj, &data.x().column(j), 1.0);
        }
    }
    u
}

/// Loss value L_n(β).
///
/// GLM families: Σᵢ { b(xᵢᵀβ) − yᵢ·xᵢᵀβ }, with the gaussian family in the
/// `½‖y − Xβ‖²` form. Lad: Σᵢ |yᵢ − xᵢᵀβ|.
pub fn loss_value(model: &LossModel, data: &Dataset, beta: &DVector<f64>) -> Result<f64> {
    check_beta_len(data, beta)?;
    let u = linear_predictor(data, beta);
    Ok(loss_from_predictor(model.family, data.y(), &u))
}

pub(crate) fn loss_from_predictor(family: Family, y: &DVector<f64>, u: &DVector<f64>) -> f64 {
    match family {
        Family::Gaussian => 0.5 * (y - u).norm_squared(),
        Family::Lad => (y - u).abs().sum(),
        fam => y
            .iter()
            .zip(u.iter())
            .map(|(&yi, &ui)| fam.b(ui) - yi * ui)
            .sum(),
    }
}

/// Gradient of the loss (a stochastic subgradient for lad).
///
/// GLM families return Xᵀ(b'(Xβ) − y). The lad subgradient is −Σᵢ sᵢ·xᵢ with
/// sᵢ = sign(yᵢ − xᵢᵀβ); exactly-zero residuals draw sᵢ ~ Uniform[−1, 1] from
/// `rng`, or use 0 (the minimal subgradient) when no rng is supplied.
pub fn loss_gradient<R: Rng + ?Sized>(
    model: &LossModel,
    data: &Dataset,
    beta: &DVector<f64>,
    mut rng: Option<&mut R>,
) -> Result<DVector<f64>> {
    check_beta_len(data, beta)?;
    let u = linear_predictor(data, beta);
    let resid_weights: DVector<f64> = match model.family {
        Family::Lad => DVector::from_iterator(
            data.n(),
            data.y().iter().zip(u.iter()).map(|(&yi, &ui)| {
                let r = yi - ui;
                if r > 0.0 {
                    -1.0
                } else if r < 0.0 {
                    1.0
                } else {
                    match rng.as_deref_mut() {
                        Some(r) => -r.random_range(-1.0..=1.0),
                        None => 0.0,
                    }
                }
            }),
        ),
        fam => DVector::from_iterator(
            data.n(),
            data.y()
                .iter()
                .zip(u.iter())
                .map(|(&yi, &ui)| fam.b_prime(ui) - yi),
        ),
    };
    Ok(data.x().tr_mul(&resid_weights))
}

/// Baseline loss L_n(0): n·log 2 (logistic), n (poisson), ½‖y‖² (gaussian),
/// ‖y‖₁ (lad).
pub fn baseline_value(model: &LossModel, data: &Dataset) -> f64 {
    let n = data.n() as f64;
    match model.family {
        Family::Logistic => n * std::f64::consts::LN_2,
        Family::Poisson => n,
        Family::Gaussian => 0.5 * data.y().norm_squared(),
        Family::Lad => data.y().abs().sum(),
    }
}
