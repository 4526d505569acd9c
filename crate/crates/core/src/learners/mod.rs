//! Regression models, evaluation metrics, cross-validation and model files.
//!
//! Three model families are implemented from first principles: Lasso linear
//! regression (coordinate descent), gradient boosted regression trees (exact
//! greedy splits on squared loss) and a small multilayer perceptron. A
//! [`TrainedModel`] wraps fitted parameters with the feature-schema
//! fingerprint it was trained against, the optional scaler, the target and
//! training metadata, and refuses to predict on mismatched schemas.

pub mod cv;
pub mod gbrt;
pub mod lasso;
pub mod metrics;
pub mod mlp;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Scaler, Target};
use crate::features::{Category, FeatureSchema};

pub use cv::{cv_grid_search, default_grid, fit_point, CvResult, CvRow, GridPoint, ModelKind};
pub use gbrt::{fit_gbrt, GbrtModel};
pub use lasso::{fit_lasso, LassoModel};
pub use metrics::{mae, medae, spearman, MetricError};
pub use mlp::{fit_mlp, MlpModel};
pub use tree::RegressionTree;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} rows vs {1} targets")]
    LengthMismatch(usize, usize),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("non-finite value in training data")]
    NonFinite,
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("empty hyperparameter grid")]
    EmptyGrid,
    #[error("schema fingerprint mismatch: model {model:?}, data {data:?}")]
    FingerprintMismatch { model: String, data: String },
    #[error("operation requires a {expected} model, got {got}")]
    WrongKind {
        expected: &'static str,
        got: &'static str,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {msg}")]
    Parse { path: String, msg: String },
}

/// Fitted parameters of one model family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Lasso(LassoModel),
    Gbrt(GbrtModel),
    Mlp(MlpModel),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Lasso(_) => ModelKind::Lasso,
            ModelParams::Gbrt(_) => ModelKind::Gbrt,
            ModelParams::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        match self {
            ModelParams::Lasso(m) => m.predict(x),
            ModelParams::Gbrt(m) => m.predict(x),
            ModelParams::Mlp(m) => m.predict(x),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_point: Option<GridPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv_score: Option<f64>,
}

/// A serializable trained regressor bound to one feature schema and target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: String,
    pub target: Target,
    pub schema_fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    pub params: ModelParams,
    pub meta: TrainMeta,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    /// Predicts on raw (unscaled) feature rows. `fingerprint` identifies
    /// the schema the rows were extracted under.
    pub fn predict(&self, x: &[Vec<f64>], fingerprint: &str) -> Result<Vec<f64>, LearnError> {
        if fingerprint != self.schema_fingerprint {
            return Err(LearnError::FingerprintMismatch {
                model: self.schema_fingerprint.clone(),
                data: fingerprint.to_string(),
            });
        }
        if x.is_empty() {
            return Ok(Vec::new());
        }
        let preds = match &self.scaler {
            Some(scaler) => self.params.predict(&scaler.transform(x)),
            None => self.params.predict(x),
        };
        Ok(preds)
    }
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<(), LearnError> {
    let text = serde_json::to_string_pretty(model).expect("model serializes");
    std::fs::write(path, text).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, LearnError> {
    let text = std::fs::read_to_string(path).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| LearnError::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Split-count feature importance of a boosted ensemble: the number of times
/// a feature splits a node, averaged over estimators. Category scores sum
/// their member features. Both rankings are descending with ties kept in
/// schema order.
pub fn feature_importance(
    model: &TrainedModel,
    schema: &FeatureSchema,
) -> Result<(Vec<(String, f64)>, Vec<(Category, f64)>), LearnError> {
    let gbrt = match &model.params {
        ModelParams::Gbrt(g) => g,
        other => {
            return Err(LearnError::WrongKind {
                expected: "gbrt",
                got: other.kind().name(),
            })
        }
    };
    let counts = gbrt.split_counts(schema.len());
    let per_feature: Vec<(String, f64)> = schema
        .entries()
        .iter()
        .zip(&counts)
        .map(|(e, &c)| (e.name.clone(), c as f64 / gbrt.n_estimators as f64))
        .collect();

    let mut per_category: Vec<(Category, f64)> = Category::ALL
        .iter()
        .map(|&c| {
            let score = schema
                .entries()
                .iter()
                .zip(&per_feature)
                .filter(|(e, _)| e.category == c)
                .map(|(_, (_, s))| s)
                .sum();
            (c, score)
        })
        .collect();

    let mut ranked = per_feature;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1)); // stable: ties keep schema order
    per_category.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok((ranked, per_category))
}
