//! End-to-end training and evaluation drivers shared by the CLI and the
//! acceptance suite: dataset assembly over several designs, the
//! filter/split/standardize/search/refit train flow, and the model-by-model
//! evaluation matrix.

use serde::{Deserialize, Serialize};

use crate::bundle::{DesignBundle, LabelRecord};
use crate::dataset::{
    assemble, filter_marginal, matrix_and_target, split, AssembleStats, Dataset, DatasetError,
    FilterMode, Scaler, Target,
};
use crate::depgraph::build_graph;
use crate::features::{schema, ExtractConfig, Extractor};
use crate::learners::{
    cv_grid_search, default_grid, fit_point, mae, medae, CvResult, GridPoint, LearnError,
    ModelKind, TrainMeta, TrainedModel,
};

/// Extracts features per design, joins with that design's labels, and
/// concatenates everything into one dataset. Joins are per design because
/// operation ids are only unique within a bundle.
pub fn assemble_designs(
    designs: &[(DesignBundle, Vec<LabelRecord>, String)],
    cfg: ExtractConfig,
) -> Result<(Dataset, AssembleStats), DatasetError> {
    let mut merged = Dataset {
        samples: Vec::new(),
        schema_fingerprint: schema().fingerprint().to_string(),
        provenance: Vec::new(),
        split_seed: None,
    };
    let mut total = AssembleStats::default();
    for (bundle, labels, name) in designs {
        let graph = build_graph(bundle);
        let extractor = Extractor::new(&graph, bundle, cfg);
        let vectors = extractor.extract_all();
        let (d, stats) = assemble(&vectors, labels, vec![name.clone()])?;
        merged.samples.extend(d.samples);
        merged.provenance.push(name.clone());
        total.joined += stats.joined;
        total.dropped_ops += stats.dropped_ops;
    }
    Ok((merged, total))
}

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub seed: u64,
    pub test_frac: f64,
    /// Marginal-sample filter applied before the split; `None` disables.
    pub filter: Option<FilterMode>,
    /// Cross-validation folds; below 2 skips the search and fits
    /// `fixed_point` (or the fast default) directly.
    pub folds: usize,
    /// Grid override; `None` uses the default grid of the model kind.
    pub grid: Option<Vec<GridPoint>>,
    pub fixed_point: Option<GridPoint>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            seed: 1,
            test_frac: 0.2,
            filter: Some(FilterMode::LabelDev {
                k: 1.5,
                group_min: 8,
            }),
            folds: 10,
            grid: None,
            fixed_point: None,
        }
    }
}

/// Single sensible hyperparameter point for runs that skip the grid search.
pub fn fast_default(kind: ModelKind) -> GridPoint {
    use crate::learners::cv::{GbrtParams, LassoParams, MlpParams};
    match kind {
        ModelKind::Lasso => GridPoint::Lasso(LassoParams {
            alpha: 1e-3,
            tol: 1e-6,
            max_iter: 1000,
        }),
        ModelKind::Gbrt => GridPoint::Gbrt(GbrtParams {
            n_estimators: 120,
            learning_rate: 0.1,
            max_depth: 6,
            min_samples_leaf: 5,
        }),
        ModelKind::Mlp => GridPoint::Mlp(MlpParams {
            hidden: vec![32],
            learning_rate: 1e-3,
            epochs: 60,
            batch_size: 32,
        }),
    }
}

pub struct FitOutcome {
    pub model: TrainedModel,
    pub cv: Option<CvResult>,
}

/// Fits one model kind for one target on a training dataset: standardize
/// when the kind needs it, search the grid under cross-validation (or take
/// the fixed point), then refit on the full training set.
pub fn train_target(
    train: &Dataset,
    target: Target,
    kind: ModelKind,
    opts: &TrainOptions,
) -> Result<FitOutcome, LearnError> {
    let (x_raw, y) = matrix_and_target(train, target);
    if x_raw.is_empty() {
        return Err(LearnError::Empty);
    }
    let (x, scaler) = if kind.needs_scaling() {
        let scaler = Scaler::fit(&x_raw);
        (scaler.transform(&x_raw), Some(scaler))
    } else {
        (x_raw, None)
    };

    let (point, cv, cv_score) = if opts.folds >= 2 {
        let grid = match &opts.grid {
            Some(g) => g.clone(),
            None => default_grid(kind),
        };
        let result = cv_grid_search(&x, &y, &grid, opts.folds, opts.seed)?;
        let best = result.best();
        (best.point.clone(), Some(result.clone()), Some(result.best().mean_mae))
    } else {
        let point = opts
            .fixed_point
            .clone()
            .unwrap_or_else(|| fast_default(kind));
        (point, None, None)
    };

    let params = fit_point(&x, &y, &point, opts.seed)?;
    Ok(FitOutcome {
        model: TrainedModel {
            schema_version: crate::bundle::SCHEMA_VERSION.to_string(),
            target,
            schema_fingerprint: train.schema_fingerprint.clone(),
            scaler,
            params,
            meta: TrainMeta {
                seed: opts.seed,
                grid_point: Some(point),
                cv_score,
            },
        },
        cv,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EvalCell {
    pub mae: f64,
    pub medae: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalRow {
    pub kind: ModelKind,
    pub filtered: bool,
    /// Cells in [vert, horiz, avg] order.
    pub cells: Vec<EvalCell>,
}

/// Trains and scores every requested kind with and without filtering,
/// producing one row per (filter arm, kind). Filtering is training-only:
/// tile position is unknowable at prediction time, so the test partition is
/// identical in both arms and differences isolate the effect on the model.
pub fn evaluate_matrix(
    data: &Dataset,
    kinds: &[ModelKind],
    filter: FilterMode,
    opts: &TrainOptions,
) -> Result<Vec<EvalRow>, PipelineError> {
    let mut rows = Vec::new();
    let (full_train, test) = split(data, opts.test_frac, opts.seed);
    for filtered in [false, true] {
        let train = if filtered {
            filter_marginal(&full_train, filter)?.0
        } else {
            full_train.clone()
        };
        for &kind in kinds {
            let mut cells = Vec::with_capacity(Target::ALL.len());
            for target in Target::ALL {
                let arm_opts = TrainOptions {
                    filter: None,
                    ..opts.clone()
                };
                let outcome = train_target(&train, target, kind, &arm_opts)?;
                let (test_x, test_y) = matrix_and_target(&test, target);
                let preds = outcome
                    .model
                    .predict(&test_x, &train.schema_fingerprint)?;
                cells.push(EvalCell {
                    mae: mae(&test_y, &preds).map_err(LearnError::from)?,
                    medae: medae(&test_y, &preds).map_err(LearnError::from)?,
                });
            }
            rows.push(EvalRow {
                kind,
                filtered,
                cells,
            });
        }
    }
    Ok(rows)
}

/// Renders the evaluation matrix as a fixed-width table.
pub fn render_eval_table(rows: &[EvalRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:<7} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "", "", "V MAE", "V MedAE", "H MAE", "H MedAE", "Avg MAE", "Avg MedAE"
    ));
    for row in rows {
        let arm = if row.filtered {
            "Filtering"
        } else {
            "Not Filtering"
        };
        let name = match row.kind {
            ModelKind::Lasso => "Linear",
            ModelKind::Mlp => "ANN",
            ModelKind::Gbrt => "GBRT",
        };
        out.push_str(&format!(
            "{:<14} {:<7} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}\n",
            arm,
            name,
            row.cells[0].mae,
            row.cells[0].medae,
            row.cells[1].mae,
            row.cells[1].medae,
            row.cells[2].mae,
            row.cells[2].medae
        ));
    }
    out
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

impl From<crate::learners::MetricError> for LearnError {
    fn from(e: crate::learners::MetricError) -> Self {
        match e {
            crate::learners::MetricError::Empty => LearnError::Empty,
            crate::learners::MetricError::LengthMismatch(a, b) => {
                LearnError::LengthMismatch(a, b)
            }
        }
    }
}
