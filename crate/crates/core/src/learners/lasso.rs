//! L1-regularized linear regression via cyclic coordinate descent.
//!
//! Minimizes `(1/2n) * ||y - Xw - b||^2 + alpha * ||w||_1` with
//! soft-thresholding updates. With this scaling, all weights are exactly
//! zero once `alpha >= max_j |x_j' (y - mean(y))| / n`.

use serde::{Deserialize, Serialize};

use super::LearnError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
}

impl LassoModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Objective value; exposed so callers can monitor the descent.
pub fn lasso_objective(x: &[Vec<f64>], y: &[f64], model: &LassoModel) -> f64 {
    let n = y.len() as f64;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &t)| (t - model.predict_row(row)).powi(2))
        .sum();
    sse / (2.0 * n) + model.alpha * model.weights.iter().map(|w| w.abs()).sum::<f64>()
}

/// Cyclic coordinate descent until the largest single-weight change in a
/// sweep drops below `tol`, or `max_iter` sweeps.
pub fn fit_lasso(
    x: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoModel, LearnError> {
    if x.is_empty() || y.is_empty() {
        return Err(LearnError::Empty);
    }
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch(x.len(), y.len()));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(LearnError::InvalidHyper(format!("alpha = {alpha}")));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite);
    }

    let n = x.len();
    let dims = x[0].len();
    let nf = n as f64;

    // Mean squared column norms; zero-variance columns stay at weight 0.
    let mut col_sq = vec![0.0f64; dims];
    for row in x {
        for (c, v) in col_sq.iter_mut().zip(row) {
            *c += v * v;
        }
    }
    for c in col_sq.iter_mut() {
        *c /= nf;
    }

    let mut weights = vec![0.0f64; dims];
    let mut intercept = y.iter().sum::<f64>() / nf;
    // residual = y - Xw - b
    let mut residual: Vec<f64> = y.iter().map(|&t| t - intercept).collect();

    for _ in 0..max_iter {
        let mut max_delta = 0.0f64;
        for j in 0..dims {
            if col_sq[j] == 0.0 {
                continue;
            }
            let w_old = weights[j];
            let rho: f64 = x
                .iter()
                .zip(&residual)
                .map(|(row, &r)| row[j] * (r + row[j] * w_old))
                .sum::<f64>()
                / nf;
            let w_new = soft_threshold(rho, alpha) / col_sq[j];
            if w_new != w_old {
                let delta = w_new - w_old;
                for (r, row) in residual.iter_mut().zip(x) {
                    *r -= delta * row[j];
                }
                weights[j] = w_new;
                max_delta = max_delta.max(delta.abs());
            }
        }
        // Re-center the intercept; exact for centered columns, cheap otherwise.
        let shift = residual.iter().sum::<f64>() / nf;
        if shift != 0.0 {
            intercept += shift;
            for r in residual.iter_mut() {
                *r -= shift;
            }
            max_delta = max_delta.max(shift.abs());
        }
        if max_delta < tol {
            break;
        }
    }

    Ok(LassoModel {
        weights,
        intercept,
        alpha,
    })
}
