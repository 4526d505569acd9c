//! K-fold cross-validation with grid search.
//!
//! Fold assignment is a seeded shuffle chunked into near-equal folds. Every
//! grid point is scored by its mean fold MAE; the argmin wins and ties go to
//! the earlier grid position. The full table is returned for reporting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbrt::fit_gbrt;
use super::lasso::fit_lasso;
use super::metrics::mae;
use super::mlp::fit_mlp;
use super::{LearnError, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lasso,
    Gbrt,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lasso => "lasso",
            ModelKind::Gbrt => "gbrt",
            ModelKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "lasso" => Some(ModelKind::Lasso),
            "gbrt" => Some(ModelKind::Gbrt),
            "mlp" => Some(ModelKind::Mlp),
            _ => None,
        }
    }

    /// Scale-sensitive kinds need standardized inputs.
    pub fn needs_scaling(self) -> bool {
        matches!(self, ModelKind::Lasso | ModelKind::Mlp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LassoParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbrtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

/// One grid-search point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridPoint {
    Lasso(LassoParams),
    Gbrt(GbrtParams),
    Mlp(MlpParams),
}

impl GridPoint {
    pub fn kind(&self) -> ModelKind {
        match self {
            GridPoint::Lasso(_) => ModelKind::Lasso,
            GridPoint::Gbrt(_) => ModelKind::Gbrt,
            GridPoint::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GridPoint::Lasso(p) => format!("alpha={}", p.alpha),
            GridPoint::Gbrt(p) => format!(
                "n_estimators={} lr={} depth={} min_leaf={}",
                p.n_estimators, p.learning_rate, p.max_depth, p.min_samples_leaf
            ),
            GridPoint::Mlp(p) => format!(
                "hidden={:?} lr={} epochs={} batch={}",
                p.hidden, p.learning_rate, p.epochs, p.batch_size
            ),
        }
    }
}

/// Default search grids; every value can be overridden from the CLI config.
pub fn default_grid(kind: ModelKind) -> Vec<GridPoint> {
    match kind {
        ModelKind::Lasso => [1e-4, 1e-3, 1e-2, 1e-1]
            .into_iter()
            .map(|alpha| {
                GridPoint::Lasso(LassoParams {
                    alpha,
                    tol: 1e-6,
                    max_iter: 1000,
                })
            })
            .collect(),
        ModelKind::Gbrt => {
            let mut grid = Vec::new();
            for n_estimators in [100, 300] {
                for learning_rate in [0.05, 0.1] {
                    for max_depth in [3, 5] {
                        grid.push(GridPoint::Gbrt(GbrtParams {
                            n_estimators,
                            learning_rate,
                            max_depth,
                            min_samples_leaf: 5,
                        }));
                    }
                }
            }
            grid
        }
        ModelKind::Mlp => {
            let mut grid = Vec::new();
            for hidden in [vec![64], vec![64, 32]] {
                for learning_rate in [1e-3, 1e-2] {
                    grid.push(GridPoint::Mlp(MlpParams {
                        hidden: hidden.clone(),
                        learning_rate,
                        epochs: 200,
                        batch_size: 32,
                    }));
                }
            }
            grid
        }
    }
}

/// Fits one model at a grid point.
pub fn fit_point(
    x: &[Vec<f64>],
    y: &[f64],
    point: &GridPoint,
    seed: u64,
) -> Result<ModelParams, LearnError> {
    Ok(match point {
        GridPoint::Lasso(p) => {
            ModelParams::Lasso(fit_lasso(x, y, p.alpha, p.tol, p.max_iter)?)
        }
        GridPoint::Gbrt(p) => ModelParams::Gbrt(fit_gbrt(
            x,
            y,
            p.n_estimators,
            p.learning_rate,
            p.max_depth,
            p.min_samples_leaf,
            seed,
        )?),
        GridPoint::Mlp(p) => ModelParams::Mlp(fit_mlp(
            x,
            y,
            &p.hidden,
            p.learning_rate,
            p.epochs,
            p.batch_size,
            seed,
        )?),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvRow {
    pub point: GridPoint,
    pub fold_maes: Vec<f64>,
    pub mean_mae: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CvResult {
    pub best_index: usize,
    pub rows: Vec<CvRow>,
}

impl CvResult {
    pub fn best(&self) -> &CvRow {
        &self.rows[self.best_index]
    }
}

/// Seeded fold assignment: indices 0..n shuffled, then chunked into `folds`
/// near-equal parts (the first `n % folds` folds take one extra sample).
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(indices[at..at + size].to_vec());
        at += size;
    }
    out
}

pub fn cv_grid_search(
    x: &[Vec<f64>],
    y: &[f64],
    grid: &[GridPoint],
    folds: usize,
    seed: u64,
) -> Result<CvResult, LearnError> {
    if grid.is_empty() {
        return Err(LearnError::EmptyGrid);
    }
    if folds < 2 {
        return Err(LearnError::InvalidHyper(format!("folds = {folds}")));
    }
    if x.len() < folds {
        return Err(LearnError::InvalidHyper(format!(
            "{} samples cannot fill {folds} folds",
            x.len()
        )));
    }
    let assignment = fold_assignment(x.len(), folds, seed);
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let mut fold_maes = Vec::with_capacity(folds);
        for held_out in &assignment {
            let hold: std::collections::HashSet<usize> = held_out.iter().copied().collect();
            let mut tr_x = Vec::with_capacity(x.len() - held_out.len());
            let mut tr_y = Vec::with_capacity(x.len() - held_out.len());
            for i in 0..x.len() {
                if !hold.contains(&i) {
                    tr_x.push(x[i].clone());
                    tr_y.push(y[i]);
                }
            }
            let model = fit_point(&tr_x, &tr_y, point, seed)?;
            let va_x: Vec<Vec<f64>> = held_out.iter().map(|&i| x[i].clone()).collect();
            let va_y: Vec<f64> = held_out.iter().map(|&i| y[i]).collect();
            let preds = model.predict(&va_x);
            fold_maes.push(mae(&va_y, &preds).expect("folds are non-empty"));
        }
        let mean_mae = fold_maes.iter().sum::<f64>() / fold_maes.len() as f64;
        rows.push(CvRow {
            point: point.clone(),
            fold_maes,
            mean_mae,
        });
    }
    let mut best_index = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.mean_mae < rows[best_index].mean_mae {
            best_index = i;
        }
    }
    Ok(CvResult { best_index, rows })
}
