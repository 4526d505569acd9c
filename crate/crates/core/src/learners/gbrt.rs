//! Gradient boosted regression trees on squared loss.
//!
//! Stage `t` fits a tree to the residuals `y - F_{t-1}(X)` and the model
//! advances by `learning_rate` times the tree output. The initial prediction
//! is the training mean, so a zero learning rate leaves predictions at the
//! mean no matter how many stages run.

use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, SortedColumns};
use super::LearnError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel {
    pub init: f64,
    pub trees: Vec<RegressionTree>,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl GbrtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.init
            + self.learning_rate
                * self
                    .trees
                    .iter()
                    .map(|t| t.predict_row(row))
                    .sum::<f64>()
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Prediction using only the first `k` trees; `k = 0` is the initial
    /// constant model.
    pub fn predict_row_staged(&self, row: &[f64], k: usize) -> f64 {
        self.init
            + self.learning_rate
                * self.trees[..k.min(self.trees.len())]
                    .iter()
                    .map(|t| t.predict_row(row))
                    .sum::<f64>()
    }

    /// Split counts per feature across the whole ensemble.
    pub fn split_counts(&self, dims: usize) -> Vec<u64> {
        let mut counts = vec![0u64; dims];
        for tree in &self.trees {
            tree.accumulate_split_counts(&mut counts);
        }
        counts
    }
}

/// `seed` is accepted for interface stability (row subsampling would use
/// it); exact greedy fitting is deterministic and does not consume it.
pub fn fit_gbrt(
    x: &[Vec<f64>],
    y: &[f64],
    n_estimators: usize,
    learning_rate: f64,
    max_depth: usize,
    min_samples_leaf: usize,
    _seed: u64,
) -> Result<GbrtModel, LearnError> {
    if x.len() != y.len() {
        return Err(LearnError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(LearnError::InvalidHyper(format!(
            "need at least 2 samples, got {}",
            x.len()
        )));
    }
    if n_estimators == 0 {
        return Err(LearnError::InvalidHyper("n_estimators = 0".into()));
    }
    if min_samples_leaf == 0 {
        return Err(LearnError::InvalidHyper("min_samples_leaf = 0".into()));
    }
    if !learning_rate.is_finite() || learning_rate < 0.0 {
        return Err(LearnError::InvalidHyper(format!(
            "learning_rate = {learning_rate}"
        )));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite);
    }

    let n = x.len();
    let init = y.iter().sum::<f64>() / n as f64;
    let indices: Vec<usize> = (0..n).collect();
    // Row orders depend only on x; build them once for the whole ensemble.
    let columns = SortedColumns::build(x, &indices);
    let mut predictions = vec![init; n];
    let mut residuals = vec![0.0f64; n];
    let mut trees = Vec::with_capacity(n_estimators);

    for _ in 0..n_estimators {
        for ((r, &t), &p) in residuals.iter_mut().zip(y).zip(&predictions) {
            *r = t - p;
        }
        let tree = RegressionTree::fit_with_columns(
            x,
            &residuals,
            &indices,
            max_depth,
            min_samples_leaf,
            &columns,
        );
        for (p, row) in predictions.iter_mut().zip(x) {
            *p += learning_rate * tree.predict_row(row);
        }
        trees.push(tree);
    }

    Ok(GbrtModel {
        init,
        trees,
        learning_rate,
        n_estimators,
        max_depth,
        min_samples_leaf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::metrics::mae;

    fn step_data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64 / 99.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[0] > 0.5 { 1.0 } else { 0.0 }).collect();
        (x, y)
    }

    #[test]
    fn constant_target_stays_constant() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![4.25; 10];
        let m = fit_gbrt(&x, &y, 5, 0.1, 3, 1, 0).unwrap();
        assert_eq!(m.init, 4.25);
        for row in &x {
            assert_eq!(m.predict_row(row), 4.25);
        }
        for tree in &m.trees {
            assert_eq!(tree.internal_node_count(), 0);
        }
    }

    #[test]
    fn zero_learning_rate_predicts_mean() {
        let (x, y) = step_data();
        let m = fit_gbrt(&x, &y, 20, 0.0, 2, 1, 0).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        for row in &x {
            assert_eq!(m.predict_row(row), mean);
        }
    }

    #[test]
    fn fits_step_function_with_stumps() {
        let (x, y) = step_data();
        let m = fit_gbrt(&x, &y, 50, 0.5, 1, 1, 0).unwrap();
        let preds = m.predict(&x);
        assert!(mae(&y, &preds).unwrap() < 1e-3);
    }

    #[test]
    fn staged_train_mae_non_increasing() {
        let (x, y) = step_data();
        let m = fit_gbrt(&x, &y, 40, 0.3, 2, 1, 0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=m.trees.len() {
            let preds: Vec<f64> = x.iter().map(|r| m.predict_row_staged(r, k)).collect();
            let e = mae(&y, &preds).unwrap();
            assert!(e <= prev + 1e-12, "stage {k}: {prev} -> {e}");
            prev = e;
        }
    }

    #[test]
    fn matches_naive_reference_boosting() {
        // Reference loop: exhaustive threshold scan with O(n^2) SSE
        // recomputation, same midpoint and tie rules.
        let (x, y) = step_data();
        let stages = 12;
        let lr = 0.5;
        let mut ref_preds = vec![y.iter().sum::<f64>() / y.len() as f64; y.len()];
        for _ in 0..stages {
            let residuals: Vec<f64> = y.iter().zip(&ref_preds).map(|(t, p)| t - p).collect();
            // Depth-1 stump on feature 0.
            let mut values: Vec<f64> = x.iter().map(|r| r[0]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let mut best: Option<(f64, f64)> = None; // (cost, threshold)
            for w in values.windows(2) {
                let threshold = w[0] + (w[1] - w[0]) / 2.0;
                let left: Vec<f64> = x
                    .iter()
                    .zip(&residuals)
                    .filter(|(r, _)| r[0] <= threshold)
                    .map(|(_, &v)| v)
                    .collect();
                let right: Vec<f64> = x
                    .iter()
                    .zip(&residuals)
                    .filter(|(r, _)| r[0] > threshold)
                    .map(|(_, &v)| v)
                    .collect();
                let sse = |v: &[f64]| {
                    let m = v.iter().sum::<f64>() / v.len() as f64;
                    v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
                };
                let cost = sse(&left) + sse(&right);
                if best.map_or(true, |(c, t)| cost < c || (cost == c && threshold < t)) {
                    best = Some((cost, threshold));
                }
            }
            let (_, threshold) = best.unwrap();
            let left: Vec<f64> = x
                .iter()
                .zip(&residuals)
                .filter(|(r, _)| r[0] <= threshold)
                .map(|(_, &v)| v)
                .collect();
            let right: Vec<f64> = x
                .iter()
                .zip(&residuals)
                .filter(|(r, _)| r[0] > threshold)
                .map(|(_, &v)| v)
                .collect();
            let lmean = left.iter().sum::<f64>() / left.len() as f64;
            let rmean = right.iter().sum::<f64>() / right.len() as f64;
            for (p, row) in ref_preds.iter_mut().zip(&x) {
                *p += lr * if row[0] <= threshold { lmean } else { rmean };
            }
        }
        let m = fit_gbrt(&x, &y, stages, lr, 1, 1, 0).unwrap();
        let preds = m.predict(&x);
        for (a, b) in preds.iter().zip(&ref_preds) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let (x, y) = step_data();
        assert!(matches!(
            fit_gbrt(&x, &y, 0, 0.1, 2, 1, 0),
            Err(LearnError::InvalidHyper(_))
        ));
        assert!(matches!(
            fit_gbrt(&x, &y, 5, -0.5, 2, 1, 0),
            Err(LearnError::InvalidHyper(_))
        ));
        assert!(matches!(
            fit_gbrt(&x, &y, 5, 0.1, 2, 0, 0),
            Err(LearnError::InvalidHyper(_))
        ));
        assert!(matches!(
            fit_gbrt(&x[..1], &y[..1], 5, 0.1, 2, 1, 0),
            Err(LearnError::InvalidHyper(_))
        ));
    }
}
