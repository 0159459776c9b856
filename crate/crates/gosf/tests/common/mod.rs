//! Independent oracles for the acceptance suite.
//!
//! Everything here is implemented from the defining formulas, separate from
//! the library's solver path: least squares via SVD, logistic/poisson fits
//! via a plain Newton loop with LU solves, lad via iterated reweighting, and
//! best-subset minima by direct enumeration of all supports.

use gosf::model::{Dataset, Family};
use nalgebra::{DMatrix, DVector};

/// Visits every size-s subset of {0, …, p−1} in lexicographic order.
pub fn combinations(p: usize, s: usize) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    fn recurse(start: usize, p: usize, s: usize, current: &mut Vec<usize>, all: &mut Vec<Vec<usize>>) {
        if current.len() == s {
            all.push(current.clone());
            return;
        }
        let remaining = s - current.len();
        for j in start..=(p - remaining) {
            current.push(j);
            recurse(j + 1, p, s, current, all);
            current.pop();
        }
    }
    recurse(0, p, s, &mut current, &mut all);
    all
}

fn submatrix(x: &DMatrix<f64>, support: &[usize]) -> DMatrix<f64> {
    let cols: Vec<_> = support.iter().map(|&j| x.column(j)).collect();
    DMatrix::from_columns(&cols)
}

/// ½‖y − X_Sθ̂‖² by SVD least squares.
pub fn ls_objective(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> f64 {
    let xs = submatrix(x, support);
    let theta = xs.clone().svd(true, true).solve(y, 1e-12).unwrap();
    0.5 * (y - xs * theta).norm_squared()
}

fn glm_value(family: Family, u: f64) -> f64 {
    match family {
        Family::Logistic => u.max(0.0) + (-u.abs()).exp().ln_1p(),
        Family::Poisson => u.clamp(-700.0, 700.0).exp(),
        _ => unreachable!(),
    }
}

fn glm_mean(family: Family, u: f64) -> f64 {
    match family {
        Family::Logistic => 1.0 / (1.0 + (-u).exp()),
        Family::Poisson => u.clamp(-700.0, 700.0).exp(),
        _ => unreachable!(),
    }
}

fn glm_weight(family: Family, u: f64) -> f64 {
    match family {
        Family::Logistic => {
            let m = 1.0 / (1.0 + (-u).exp());
            m * (1.0 - m)
        }
        Family::Poisson => u.clamp(-700.0, 700.0).exp(),
        _ => unreachable!(),
    }
}

/// Restricted GLM objective Σ{b(u) − y·u} minimized by a plain Newton loop.
pub fn glm_objective(family: Family, x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> f64 {
    let xs = submatrix(x, support);
    let k = xs.ncols();
    let n = y.len();
    let mut theta = DVector::zeros(k);
    let value = |t: &DVector<f64>| -> f64 {
        let u = &xs * t;
        (0..n).map(|i| glm_value(family, u[i]) - y[i] * u[i]).sum()
    };
    let mut obj = value(&theta);
    for _ in 0..300 {
        let u = &xs * &theta;
        let resid = DVector::from_fn(n, |i, _| glm_mean(family, u[i]) - y[i]);
        let grad = xs.tr_mul(&resid);
        if grad.amax() < 1e-11 * (1.0 + obj.abs()) {
            break;
        }
        let mut h = DMatrix::zeros(k, k);
        for i in 0..n {
            let w = glm_weight(family, u[i]);
            let row = xs.row(i);
            for a in 0..k {
                for b in 0..k {
                    h[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            h[(a, a)] += 1e-10;
        }
        let Some(dir) = h.lu().solve(&(-&grad)) else { break };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-14 {
            let cand = &theta + &dir * t;
            let cobj = value(&cand);
            if cobj < obj {
                theta = cand;
                let gain = obj - cobj;
                obj = cobj;
                moved = true;
                if gain < 1e-13 * (1.0 + obj.abs()) {
                    return obj;
                }
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    obj
}

/// Restricted lad fit by iterated reweighting on √(r² + δ²), run well past
/// the 1e-6 step tolerance and keeping the best true absolute loss seen
/// along the iterate path (IRLS creeps near the nonsmooth minimum).
pub fn lad_objective(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> f64 {
    const DELTA: f64 = 1e-8;
    let xs = submatrix(x, support);
    let k = xs.ncols();
    let n = y.len();
    let mut theta: DVector<f64> = DVector::zeros(k);
    let mut best = y.abs().sum();
    for _ in 0..3000 {
        let u = &xs * &theta;
        best = best.min((y - &u).abs().sum());
        let mut xtwx = DMatrix::zeros(k, k);
        let mut xtwy = DVector::zeros(k);
        for i in 0..n {
            let w = 1.0 / ((y[i] - u[i]).powi(2) + DELTA * DELTA).sqrt();
            let row = xs.row(i);
            for a in 0..k {
                xtwy[a] += w * row[a] * y[i];
                for b in 0..k {
                    xtwx[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            xtwx[(a, a)] += 1e-12;
        }
        let Some(next) = xtwx.lu().solve(&xtwy) else { break };
        let step = (&next - &theta).amax();
        theta = next;
        if step <= 1e-10 * (1.0 + theta.amax()) {
            break;
        }
    }
    best.min((y - &xs * &theta).abs().sum())
}

/// ℓ1 norm of the restricted minimizer (used for radius qualification).
pub fn minimizer_l1_norm(family: Family, x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> f64 {
    let xs = submatrix(x, support);
    let theta: DVector<f64> = match family {
        Family::Gaussian => xs.clone().svd(true, true).solve(y, 1e-12).unwrap(),
        Family::Logistic | Family::Poisson => {
            let k = xs.ncols();
            let n = y.len();
            let mut theta = DVector::zeros(k);
            for _ in 0..200 {
                let u = &xs * &theta;
                let resid = DVector::from_fn(n, |i, _| glm_mean(family, u[i]) - y[i]);
                let grad = xs.tr_mul(&resid);
                if grad.amax() < 1e-10 {
                    break;
                }
                let mut h = DMatrix::zeros(k, k);
                for i in 0..n {
                    let w = glm_weight(family, u[i]);
                    let row = xs.row(i);
                    for a in 0..k {
                        for b in 0..k {
                            h[(a, b)] += w * row[a] * row[b];
                        }
                    }
                }
                for a in 0..k {
                    h[(a, a)] += 1e-10;
                }
                let Some(dir) = h.lu().solve(&(-&grad)) else { break };
                theta += dir;
            }
            theta
        }
        Family::Lad => {
            const DELTA: f64 = 1e-8;
            let k = xs.ncols();
            let n = y.len();
            let mut theta: DVector<f64> = DVector::zeros(k);
            for _ in 0..400 {
                let u = &xs * &theta;
                let mut xtwx = DMatrix::zeros(k, k);
                let mut xtwy = DVector::zeros(k);
                for i in 0..n {
                    let w = 1.0 / ((y[i] - u[i]).powi(2) + DELTA * DELTA).sqrt();
                    let row = xs.row(i);
                    for a in 0..k {
                        xtwy[a] += w * row[a] * y[i];
                        for b in 0..k {
                            xtwx[(a, b)] += w * row[a] * row[b];
                        }
                    }
                }
                let Some(next) = xtwx.lu().solve(&xtwy) else { break };
                let step = (&next - &theta).amax();
                theta = next;
                if step <= 1e-8 * (1.0 + theta.amax()) {
                    break;
                }
            }
            theta
        }
    };
    theta.iter().map(|v| v.abs()).sum()
}

/// Exhaustive best-subset minimum over all size-s supports.
/// Returns (objective, support).
pub fn exhaustive_best_subset(
    family: Family,
    data: &Dataset,
    s: usize,
) -> (f64, Vec<usize>) {
    let mut best = f64::INFINITY;
    let mut best_support = Vec::new();
    for support in combinations(data.p(), s) {
        let obj = match family {
            Family::Gaussian => ls_objective(data.x(), data.y(), &support),
            Family::Logistic | Family::Poisson => {
                glm_objective(family, data.x(), data.y(), &support)
            }
            Family::Lad => lad_objective(data.x(), data.y(), &support),
        };
        if obj < best {
            best = obj;
            best_support = support;
        }
    }
    (best, best_support)
}

/// Exhaustive projection statistic max_S eᵀX_S(X_SᵀX_S)⁻¹X_Sᵀe.
pub fn exhaustive_projection(x: &DMatrix<f64>, e: &DVector<f64>, s: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for support in combinations(x.ncols(), s) {
        let xs = submatrix(x, &support);
        let theta = xs.clone().svd(true, true).solve(e, 1e-12).unwrap();
        let fitted = xs * theta;
        best = best.max(e.norm_squared() - (e - fitted).norm_squared());
    }
    best
}
