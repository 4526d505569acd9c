//! Prediction-phase front end: per-operation congestion estimates mapped
//! back to source regions, with optimization hints.
//!
//! Regions are (file, line-range) groups of operations; adjacent lines of
//! one function coalesce. Each region reports the max and mean predicted
//! congestion per target, its top contributing operations, and heuristic
//! hint tags. Hints are suggestions for the designer, never transformations.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{DesignBundle, OpType, SourceLoc};
use crate::dataset::{Labels, Target};
use crate::depgraph::{build_graph, NodeKind};
use crate::features::{schema, ExtractConfig, Extractor};
use crate::learners::{LearnError, TrainedModel};

pub const HINT_NOT_INLINE: &str = "consider-not-inline";
pub const HINT_INPUT_REPLICATION: &str = "consider-input-replication";
pub const HINT_MUX_PRESSURE: &str = "reduce-mux-pressure";

/// Trained models for the three targets.
pub struct ModelSet {
    pub vert: TrainedModel,
    pub horiz: TrainedModel,
    pub avg: TrainedModel,
}

impl ModelSet {
    pub fn get(&self, target: Target) -> &TrainedModel {
        match target {
            Target::Vert => &self.vert,
            Target::Horiz => &self.horiz,
            Target::Avg => &self.avg,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpPrediction {
    pub op_id: String,
    pub function_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_loc: Option<SourceLoc>,
    pub vert: f64,
    pub horiz: f64,
    pub avg: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionReport {
    /// Source file, or "(unknown)" for operations without a location.
    pub file: String,
    pub line_start: u32,
    pub line_end: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_id: Option<String>,
    pub op_count: usize,
    pub max: Labels,
    pub mean: Labels,
    /// Highest-predicted member operations, at most three.
    pub top_ops: Vec<String>,
    pub hints: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// Per-operation predictions for every non-port node of the design. Members
/// of a merged node share the node's feature vector and thus its estimate.
pub fn predict_design(
    bundle: &DesignBundle,
    models: &ModelSet,
    cfg: ExtractConfig,
) -> Result<Vec<OpPrediction>, ReportError> {
    let graph = build_graph(bundle);
    let extractor = Extractor::new(&graph, bundle, cfg);
    let vectors = extractor.extract_all();
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.values.clone()).collect();
    let fp = schema().fingerprint();
    let vert = models.vert.predict(&rows, fp)?;
    let horiz = models.horiz.predict(&rows, fp)?;
    let avg = models.avg.predict(&rows, fp)?;
    Ok(vectors
        .into_iter()
        .enumerate()
        .map(|(i, v)| OpPrediction {
            op_id: v.op_id,
            function_id: v.function_id,
            source_loc: v.source_loc,
            vert: vert[i],
            horiz: horiz[i],
            avg: avg[i],
        })
        .collect())
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum RegionKey {
    Unknown,
    Loc { file_ord: usize, line: u32 },
}

/// Groups predictions into source regions and ranks them by worst predicted
/// average congestion. Returns at most `top_k` regions.
pub fn localize(
    preds: &[OpPrediction],
    bundle: &DesignBundle,
    top_k: usize,
) -> Vec<RegionReport> {
    let graph = build_graph(bundle);

    // Buckets keyed by (file, line); unknown locations pool together.
    let mut files: Vec<String> = preds
        .iter()
        .filter_map(|p| p.source_loc.as_ref().map(|l| l.file.clone()))
        .collect();
    files.sort();
    files.dedup();
    let file_ord: HashMap<&str, usize> =
        files.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();

    let mut buckets: BTreeMap<RegionKey, Vec<&OpPrediction>> = BTreeMap::new();
    for p in preds {
        let key = match &p.source_loc {
            Some(loc) => RegionKey::Loc {
                file_ord: file_ord[loc.file.as_str()],
                line: loc.line,
            },
            None => RegionKey::Unknown,
        };
        buckets.entry(key).or_default().push(p);
    }

    // Coalesce adjacent lines that belong to one function.
    struct Draft<'a> {
        file: Option<String>,
        line_start: u32,
        line_end: u32,
        functions: Vec<String>,
        members: Vec<&'a OpPrediction>,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    for (key, members) in buckets {
        let mut functions: Vec<String> =
            members.iter().map(|p| p.function_id.clone()).collect();
        functions.sort();
        functions.dedup();
        match key {
            RegionKey::Unknown => drafts.push(Draft {
                file: None,
                line_start: 0,
                line_end: 0,
                functions,
                members,
            }),
            RegionKey::Loc { file_ord, line } => {
                let file = files[file_ord].clone();
                if let Some(last) = drafts.last_mut() {
                    if last.file.as_deref() == Some(file.as_str())
                        && line == last.line_end + 1
                        && last.functions.len() == 1
                        && functions == last.functions
                    {
                        last.line_end = line;
                        last.members.extend(members);
                        continue;
                    }
                }
                drafts.push(Draft {
                    file: Some(file),
                    line_start: line,
                    line_end: line,
                    functions,
                    members,
                });
            }
        }
    }

    let mux_pressure = {
        let mux = bundle.globals.muxes.resource_usage;
        let top = bundle.top_function().resource_usage;
        let denom = (top.lut + top.ff) as f64;
        if denom > 0.0 {
            (mux.lut + mux.ff) as f64 / denom
        } else {
            0.0
        }
    };

    let mut regions: Vec<RegionReport> = drafts
        .into_iter()
        .map(|d| {
            let n = d.members.len() as f64;
            let fold = |f: &dyn Fn(&OpPrediction) -> f64| {
                let max = d.members.iter().map(|p| f(p)).fold(f64::NEG_INFINITY, f64::max);
                let mean = d.members.iter().map(|p| f(p)).sum::<f64>() / n;
                (max, mean)
            };
            let (vmax, vmean) = fold(&|p| p.vert);
            let (hmax, hmean) = fold(&|p| p.horiz);
            let (amax, amean) = fold(&|p| p.avg);

            let mut ranked: Vec<&OpPrediction> = d.members.clone();
            ranked.sort_by(|a, b| b.avg.total_cmp(&a.avg).then(a.op_id.cmp(&b.op_id)));
            let top_ops = ranked.iter().take(3).map(|p| p.op_id.to_string()).collect();

            let mut hints = Vec::new();
            let mut merged_members = 0usize;
            let mut shared_feeder: HashMap<usize, usize> = HashMap::new();
            let mut in_degree_total = 0usize;
            for p in &d.members {
                if let Some(node) = graph.node_of_op(&p.op_id) {
                    if graph.nodes()[node].kind == NodeKind::Merged {
                        merged_members += 1;
                    }
                    in_degree_total += graph.in_edges(node).len();
                    for &(src, _) in graph.in_edges(node) {
                        *shared_feeder.entry(src).or_insert(0) += 1;
                    }
                }
            }
            if 2 * merged_members > d.members.len() {
                hints.push(HINT_NOT_INLINE.to_string());
            }
            let hot_feeder = shared_feeder
                .iter()
                .filter(|(&src, _)| {
                    let node = &graph.nodes()[src];
                    node.kind == NodeKind::Port || node.attrs.op_type == Some(OpType::Load)
                })
                .map(|(_, &c)| c)
                .max()
                .unwrap_or(0);
            if hot_feeder >= 2 && 2 * hot_feeder >= d.members.len() {
                hints.push(HINT_INPUT_REPLICATION.to_string());
            }
            if mux_pressure > 0.25 && in_degree_total as f64 / n > 2.0 {
                hints.push(HINT_MUX_PRESSURE.to_string());
            }

            RegionReport {
                file: d.file.unwrap_or_else(|| "(unknown)".to_string()),
                line_start: d.line_start,
                line_end: d.line_end,
                function_id: if d.functions.len() == 1 {
                    Some(d.functions[0].clone())
                } else {
                    None
                },
                op_count: d.members.len(),
                max: Labels {
                    vert: vmax,
                    horiz: hmax,
                    avg: amax,
                },
                mean: Labels {
                    vert: vmean,
                    horiz: hmean,
                    avg: amean,
                },
                top_ops,
                hints,
            }
        })
        .collect();

    regions.sort_by(|a, b| {
        b.max
            .avg
            .total_cmp(&a.max.avg)
            .then_with(|| a.file.cmp(&b.file))
            .then_with(|| a.line_start.cmp(&b.line_start))
    });
    regions.truncate(top_k);
    regions
}

/// Human-readable rendering, one region per block.
pub fn render_text(regions: &[RegionReport]) -> String {
    let mut out = String::new();
    if regions.is_empty() {
        out.push_str("no regions to report\n");
        return out;
    }
    for (i, r) in regions.iter().enumerate() {
        let lines = if r.line_start == r.line_end {
            format!("{}", r.line_start)
        } else {
            format!("{}-{}", r.line_start, r.line_end)
        };
        out.push_str(&format!(
            "#{rank} {file}:{lines} ({ops} ops{func})\n",
            rank = i + 1,
            file = r.file,
            ops = r.op_count,
            func = r
                .function_id
                .as_ref()
                .map(|f| format!(", fn {f}"))
                .unwrap_or_default(),
        ));
        out.push_str(&format!(
            "    avg cong: max {:.2}% mean {:.2}% | vert max {:.2}% | horiz max {:.2}%\n",
            r.max.avg, r.mean.avg, r.max.vert, r.max.horiz
        ));
        out.push_str(&format!("    top ops: {}\n", r.top_ops.join(", ")));
        if !r.hints.is_empty() {
            out.push_str(&format!("    hints: {}\n", r.hints.join(", ")));
        }
    }
    out
}

/// Per-region CSV with one row per region, ranked.
pub fn render_csv(regions: &[RegionReport]) -> String {
    let mut out = String::from(
        "rank,file,line_start,line_end,function,op_count,max_vert,max_horiz,max_avg,mean_avg,hints\n",
    );
    for (i, r) in regions.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            i + 1,
            r.file,
            r.line_start,
            r.line_end,
            r.function_id.as_deref().unwrap_or(""),
            r.op_count,
            r.max.vert,
            r.max.horiz,
            r.max.avg,
            r.mean.avg,
            r.hints.join(";")
        ));
    }
    out
}
