//! Sample assembly, marginal-replica filtering, splitting and scaling.
//!
//! A sample joins one feature vector with the three congestion targets.
//! Replica groups (copies of one source operation created by unrolling) are
//! the unit of marginal filtering: replicas share features, so group members
//! whose labels fall far below the group median are dropped before training.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{LabelRecord, OpType, SourceLoc};
use crate::features::{schema, FeatureVector};

/// Congestion targets, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labels {
    pub vert: f64,
    pub horiz: f64,
    pub avg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Vert,
    Horiz,
    Avg,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Vert, Target::Horiz, Target::Avg];

    pub fn name(self) -> &'static str {
        match self {
            Target::Vert => "vert",
            Target::Horiz => "horiz",
            Target::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Option<Target> {
        match s {
            "vert" => Some(Target::Vert),
            "horiz" => Some(Target::Horiz),
            "avg" => Some(Target::Avg),
            _ => None,
        }
    }
}

impl Labels {
    pub fn get(&self, target: Target) -> f64 {
        match target {
            Target::Vert => self.vert,
            Target::Horiz => self.horiz,
            Target::Avg => self.avg,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: FeatureVector,
    pub labels: Labels,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replica_group: Option<String>,
    /// Tile coordinates, when the label source knows them. Never a feature;
    /// only the margin-band filter reads them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clb: Option<(u32, u32)>,
    /// Design the sample came from. Replica groups are design-local; this
    /// keeps groups from pooling across designs in a merged dataset.
    #[serde(default)]
    pub design: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub schema_fingerprint: String,
    pub provenance: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("feature vector for {op_id:?} has {got} values, schema expects {want}")]
    SchemaMismatch {
        op_id: String,
        got: usize,
        want: usize,
    },
    #[error("margin_band filtering requested but labels carry no coordinates")]
    NoCoordinates,
    #[error("dataset is empty")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {msg}")]
    Parse { path: String, msg: String },
    #[error("dataset fingerprint {found:?} does not match current schema {want:?}")]
    Fingerprint { found: String, want: String },
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AssembleStats {
    pub joined: usize,
    /// Operations that had a feature vector but no label.
    pub dropped_ops: usize,
}

/// Inner-joins feature vectors with label records on op id. An operation
/// with several label records yields several samples sharing one vector.
pub fn assemble(
    vectors: &[FeatureVector],
    labels: &[LabelRecord],
    provenance: Vec<String>,
) -> Result<(Dataset, AssembleStats), DatasetError> {
    let want = schema().len();
    for fv in vectors {
        if fv.values.len() != want {
            return Err(DatasetError::SchemaMismatch {
                op_id: fv.op_id.clone(),
                got: fv.values.len(),
                want,
            });
        }
    }
    let mut by_op: HashMap<&str, Vec<&LabelRecord>> = HashMap::new();
    for rec in labels {
        by_op.entry(rec.op_id.as_str()).or_default().push(rec);
    }
    let design = provenance.first().cloned().unwrap_or_default();
    let mut samples = Vec::new();
    let mut stats = AssembleStats::default();
    for fv in vectors {
        match by_op.get(fv.op_id.as_str()) {
            Some(recs) => {
                for rec in recs {
                    samples.push(Sample {
                        features: fv.clone(),
                        labels: Labels {
                            vert: rec.vert_cong_pct,
                            horiz: rec.horiz_cong_pct,
                            avg: rec.avg_cong_pct,
                        },
                        replica_group: rec
                            .replica_group
                            .as_ref()
                            .map(|g| format!("{design}:{g}")),
                        clb: match (rec.clb_x, rec.clb_y) {
                            (Some(x), Some(y)) => Some((x, y)),
                            _ => None,
                        },
                        design: design.clone(),
                        weight: 1.0,
                    });
                    stats.joined += 1;
                }
            }
            None => stats.dropped_ops += 1,
        }
    }
    Ok((
        Dataset {
            samples,
            schema_fingerprint: schema().fingerprint().to_string(),
            provenance,
            split_seed: None,
        },
        stats,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FilterMode {
    /// Within each replica group of at least `group_min` samples, drop
    /// samples whose average-congestion label is below `median - k * IQR`.
    LabelDev { k: f64, group_min: usize },
    /// Drop samples placed within `margin` tiles of the device boundary.
    /// The boundary is the bounding box of all observed coordinates.
    MarginBand { margin: u32 },
}

/// Median with the even-count convention: mean of the two central order
/// statistics. `values` must be sorted.
fn median_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Interquartile range via median-of-halves; the middle element is excluded
/// from both halves when the count is odd.
fn iqr_sorted(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let half = n / 2;
    let q1 = median_sorted(&values[..half]);
    let q3 = median_sorted(&values[n - half..]);
    q3 - q1
}

/// Group key for marginal filtering; always design-local. Samples without
/// an explicit replica group fall back to (source location, operation type)
/// read off the one-hot block; samples with neither are never grouped.
fn group_key(sample: &Sample) -> Option<String> {
    if let Some(g) = &sample.replica_group {
        return Some(g.clone());
    }
    let loc: &SourceLoc = sample.features.source_loc.as_ref()?;
    let sch = schema();
    let own_type = OpType::ALL.iter().find(|t| {
        let idx = sch.position(&format!("is_{}", t.name())).unwrap();
        sample.features.values[idx] == 1.0
    })?;
    Some(format!(
        "{}:{}:{}:{}",
        sample.design,
        loc.file,
        loc.line,
        own_type.name()
    ))
}

/// Removes marginal samples. Returns the filtered dataset and the removed
/// samples so callers can report the removed fraction.
pub fn filter_marginal(
    d: &Dataset,
    mode: FilterMode,
) -> Result<(Dataset, Vec<Sample>), DatasetError> {
    if d.samples.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut keep = vec![true; d.samples.len()];
    match mode {
        FilterMode::LabelDev { k, group_min } => {
            if k.is_finite() {
                let mut groups: HashMap<String, Vec<usize>> = HashMap::new();
                for (i, s) in d.samples.iter().enumerate() {
                    if let Some(key) = group_key(s) {
                        groups.entry(key).or_default().push(i);
                    }
                }
                for members in groups.values() {
                    if members.len() < group_min.max(1) {
                        continue;
                    }
                    let mut labels: Vec<f64> =
                        members.iter().map(|&i| d.samples[i].labels.avg).collect();
                    labels.sort_by(f64::total_cmp);
                    let threshold = median_sorted(&labels) - k * iqr_sorted(&labels);
                    for &i in members {
                        if d.samples[i].labels.avg < threshold {
                            keep[i] = false;
                        }
                    }
                }
            }
        }
        FilterMode::MarginBand { margin } => {
            let coords: Vec<(u32, u32)> = d.samples.iter().filter_map(|s| s.clb).collect();
            if coords.len() != d.samples.len() {
                return Err(DatasetError::NoCoordinates);
            }
            let min_x = coords.iter().map(|c| c.0).min().unwrap();
            let max_x = coords.iter().map(|c| c.0).max().unwrap();
            let min_y = coords.iter().map(|c| c.1).min().unwrap();
            let max_y = coords.iter().map(|c| c.1).max().unwrap();
            for (i, s) in d.samples.iter().enumerate() {
                let (x, y) = s.clb.unwrap();
                if x < min_x + margin
                    || x > max_x - margin.min(max_x)
                    || y < min_y + margin
                    || y > max_y - margin.min(max_y)
                {
                    keep[i] = false;
                }
            }
        }
    }
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for (i, s) in d.samples.iter().enumerate() {
        if keep[i] {
            kept.push(s.clone());
        } else {
            removed.push(s.clone());
        }
    }
    Ok((
        Dataset {
            samples: kept,
            schema_fingerprint: d.schema_fingerprint.clone(),
            provenance: d.provenance.clone(),
            split_seed: d.split_seed,
        },
        removed,
    ))
}

fn fnv1a64_chain(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for part in parts {
        for &b in *part {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash ^= 0xff;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Seeded identity hash of a sample: stable under removal of other samples,
/// so filtering barely perturbs which side of the split survivors land on.
fn sample_hash(seed: u64, s: &Sample) -> u64 {
    let labels = [
        s.labels.vert.to_bits().to_le_bytes(),
        s.labels.horiz.to_bits().to_le_bytes(),
    ];
    let clb = s.clb.unwrap_or((u32::MAX, u32::MAX));
    fnv1a64_chain(
        seed,
        &[
            s.design.as_bytes(),
            s.features.op_id.as_bytes(),
            &labels[0],
            &labels[1],
            &clb.0.to_le_bytes(),
            &clb.1.to_le_bytes(),
        ],
    )
}

/// Seeded random split. The test set holds `round(n * test_frac)` samples,
/// at least one when the fraction is positive; train and test are disjoint
/// and exhaustive, and identical for identical seeds. Samples are ordered
/// by a per-sample seeded hash rather than a shuffle, so dropping a few
/// samples leaves everything else on the side it already had.
pub fn split(d: &Dataset, test_frac: f64, seed: u64) -> (Dataset, Dataset) {
    assert!(
        test_frac > 0.0 && test_frac < 1.0,
        "test_frac must be in (0, 1)"
    );
    let n = d.samples.len();
    let mut keyed: Vec<(u64, usize)> = d
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (sample_hash(seed, s), i))
        .collect();
    keyed.sort_unstable();
    let test_n = ((n as f64 * test_frac).round() as usize).clamp(1, n);
    let make = |slice: &[(u64, usize)]| Dataset {
        samples: slice.iter().map(|&(_, i)| d.samples[i].clone()).collect(),
        schema_fingerprint: d.schema_fingerprint.clone(),
        provenance: d.provenance.clone(),
        split_seed: Some(seed),
    };
    let test = make(&keyed[..test_n]);
    let train = make(&keyed[test_n..]);
    (train, test)
}

/// Per-feature z-score parameters fitted on training data. Zero-variance
/// features map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    /// Population statistics over the rows of `x`.
    pub fn fit(x: &[Vec<f64>]) -> Scaler {
        assert!(!x.is_empty(), "cannot fit a scaler on no rows");
        let cols = x[0].len();
        let n = x.len() as f64;
        let mut means = vec![0.0; cols];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n;
        }
        let mut vars = vec![0.0; cols];
        for row in x {
            for ((var, v), m) in vars.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *var += d * d;
            }
        }
        let stds = vars.iter().map(|v| (v / n).sqrt()).collect();
        Scaler { means, stds }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.means)
            .zip(&self.stds)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Extracts the raw feature matrix and one target column from a dataset.
pub fn matrix_and_target(d: &Dataset, target: Target) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x = d.samples.iter().map(|s| s.features.values.clone()).collect();
    let y = d.samples.iter().map(|s| s.labels.get(target)).collect();
    (x, y)
}

/// Fits a scaler on the training matrix and applies it to both sides.
pub fn standardize(
    train: &[Vec<f64>],
    test: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Scaler) {
    let scaler = Scaler::fit(train);
    (scaler.transform(train), scaler.transform(test), scaler)
}

pub fn save_dataset(path: &std::path::Path, d: &Dataset) -> Result<(), DatasetError> {
    let text = serde_json::to_string_pretty(d).expect("dataset serializes");
    std::fs::write(path, text).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_dataset(path: &std::path::Path) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let d: Dataset = serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    if d.schema_fingerprint != schema().fingerprint() {
        return Err(DatasetError::Fingerprint {
            found: d.schema_fingerprint,
            want: schema().fingerprint().to_string(),
        });
    }
    Ok(d)
}
