//! On-disk data model for HLS design exports and congestion labels.
//!
//! A [`DesignBundle`] describes one synthesized design: IR operations with
//! schedule and binding information, dataflow edges weighted by wire count,
//! I/O ports, per-function statistics and device-level globals. A label file
//! carries per-operation routing congestion measured after place and route.
//! Any exporter that can emit these two files (a real-tool adapter or the
//! built-in synthetic oracle) plugs into the rest of the pipeline unchanged.
//!
//! Both files are JSON documents. Bundles carry `schema_version` "1"; label
//! files are flat arrays of records. Loading validates every cross reference
//! before a bundle is handed out, so downstream code never sees a dangling
//! op id or an inconsistent label.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version string expected in the `schema_version` field of bundle files.
pub const SCHEMA_VERSION: &str = "1";

/// Tolerance for checking `avg_cong_pct == (vert + horiz) / 2`.
pub const AVG_TOLERANCE: f64 = 1e-9;

/// Fixed, closed vocabulary of IR operation types. Anything the exporter
/// cannot classify maps to `Other` so the feature dimension stays stable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpType {
    Add,
    Sub,
    Mul,
    Div,
    Icmp,
    Select,
    Xor,
    And,
    Or,
    Shift,
    Load,
    Store,
    Phi,
    Call,
    Other,
}

impl OpType {
    pub const ALL: [OpType; 15] = [
        OpType::Add,
        OpType::Sub,
        OpType::Mul,
        OpType::Div,
        OpType::Icmp,
        OpType::Select,
        OpType::Xor,
        OpType::And,
        OpType::Or,
        OpType::Shift,
        OpType::Load,
        OpType::Store,
        OpType::Phi,
        OpType::Call,
        OpType::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpType::Add => "add",
            OpType::Sub => "sub",
            OpType::Mul => "mul",
            OpType::Div => "div",
            OpType::Icmp => "icmp",
            OpType::Select => "select",
            OpType::Xor => "xor",
            OpType::And => "and",
            OpType::Or => "or",
            OpType::Shift => "shift",
            OpType::Load => "load",
            OpType::Store => "store",
            OpType::Phi => "phi",
            OpType::Call => "call",
            OpType::Other => "other",
        }
    }

    /// Index into [`OpType::ALL`].
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|t| *t == self).unwrap()
    }
}

impl fmt::Display for OpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four FPGA resource classes tracked throughout the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResourceKind {
    Dsp,
    Bram,
    Lut,
    Ff,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 4] = [
        ResourceKind::Dsp,
        ResourceKind::Bram,
        ResourceKind::Lut,
        ResourceKind::Ff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResourceKind::Dsp => "dsp",
            ResourceKind::Bram => "bram",
            ResourceKind::Lut => "lut",
            ResourceKind::Ff => "ff",
        }
    }
}

/// Resource usage over the four tracked classes. All four keys must be
/// present in the on-disk form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceUsage {
    #[serde(rename = "DSP")]
    pub dsp: u64,
    #[serde(rename = "BRAM")]
    pub bram: u64,
    #[serde(rename = "LUT")]
    pub lut: u64,
    #[serde(rename = "FF")]
    pub ff: u64,
}

impl ResourceUsage {
    pub fn new(dsp: u64, bram: u64, lut: u64, ff: u64) -> Self {
        ResourceUsage { dsp, bram, lut, ff }
    }

    pub fn get(&self, kind: ResourceKind) -> u64 {
        match kind {
            ResourceKind::Dsp => self.dsp,
            ResourceKind::Bram => self.bram,
            ResourceKind::Lut => self.lut,
            ResourceKind::Ff => self.ff,
        }
    }

    pub fn total(&self) -> u64 {
        self.dsp + self.bram + self.lut + self.ff
    }

    pub fn add(&mut self, other: &ResourceUsage) {
        self.dsp += other.dsp;
        self.bram += other.bram;
        self.lut += other.lut;
        self.ff += other.ff;
    }
}

/// Source position an IR operation was lowered from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceLoc {
    pub file: String,
    pub line: u32,
}

/// One IR operation with its schedule, binding and cost metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operation {
    pub op_id: String,
    pub op_type: OpType,
    pub bitwidth: u32,
    pub delay_ns: f64,
    pub latency_cycles: u32,
    pub start_state: u32,
    pub end_state: u32,
    pub resource_usage: ResourceUsage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtl_instance: Option<String>,
    pub function_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_loc: Option<SourceLoc>,
}

/// Dataflow dependency between two operations. `wire_count` is the number
/// of bits of the producer's output actually consumed; exporters that cannot
/// determine the consumed slice should default it to the producer bitwidth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: String,
    pub dst: String,
    pub wire_count: u32,
}

/// Per-function resource and clock summary. Exactly one function per bundle
/// has `is_top` set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionStats {
    pub function_id: String,
    pub resource_usage: ResourceUsage,
    pub target_clock_ns: f64,
    pub estimated_clock_ns: f64,
    pub clock_uncertainty_ns: f64,
    pub is_top: bool,
}

/// One memory block; `primitives` must equal `words * bits * banks`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryStats {
    pub words: u64,
    pub banks: u64,
    pub bits: u64,
    pub primitives: u64,
}

/// Design-wide multiplexer summary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MuxStats {
    pub count: u64,
    pub resource_usage: ResourceUsage,
    pub max_input_size: u64,
    pub max_bitwidth: u64,
}

/// Device capacity and design-wide structural summaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    pub memories: Vec<MemoryStats>,
    pub muxes: MuxStats,
    pub device_resources: ResourceUsage,
}

/// An I/O port and the operations wired to it. Ports are not operations;
/// they become auxiliary graph nodes that shape neighborhood features.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub port_id: String,
    pub connected_ops: Vec<String>,
    pub bitwidth: u32,
}

/// Ground-truth routing congestion for one operation, in percent of the
/// routing capacity of the tile it was placed in. Values above 100 are
/// meaningful (demand exceeding supply) and are never clipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub op_id: String,
    pub vert_cong_pct: f64,
    pub horiz_cong_pct: f64,
    pub avg_cong_pct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clb_x: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clb_y: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replica_group: Option<String>,
}

/// The full HLS export of one design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignBundle {
    pub schema_version: String,
    pub operations: Vec<Operation>,
    pub edges: Vec<Edge>,
    pub ports: Vec<PortDecl>,
    pub functions: Vec<FunctionStats>,
    pub globals: GlobalStats,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {msg}")]
    Parse { path: String, msg: String },
    #[error("{path}: schema version mismatch: expected {SCHEMA_VERSION:?}, found {found:?}")]
    SchemaVersion { path: String, found: String },
    #[error("{path}: operation {index} ({op_id:?}): duplicate op id")]
    DuplicateOp {
        path: String,
        index: usize,
        op_id: String,
    },
    #[error("{path}: operation {op_id:?}: {msg}")]
    InvalidOp {
        path: String,
        op_id: String,
        msg: String,
    },
    #[error("{path}: edge {index} ({src:?} -> {dst:?}): dangling op reference {missing:?}")]
    DanglingOp {
        path: String,
        index: usize,
        src: String,
        dst: String,
        missing: String,
    },
    #[error("{path}: edge {index} ({src:?} -> {dst:?}): {msg}")]
    InvalidEdge {
        path: String,
        index: usize,
        src: String,
        dst: String,
        msg: String,
    },
    #[error("{path}: port {port_id:?}: {msg}")]
    InvalidPort {
        path: String,
        port_id: String,
        msg: String,
    },
    #[error("{path}: function {function_id:?}: {msg}")]
    InvalidFunction {
        path: String,
        function_id: String,
        msg: String,
    },
    #[error("{path}: missing top function (no FunctionStats has is_top)")]
    MissingTop { path: String },
    #[error("{path}: multiple top functions ({first:?} and {second:?})")]
    MultipleTop {
        path: String,
        first: String,
        second: String,
    },
    #[error("{path}: memory entry {index}: primitives {primitives} != words*bits*banks = {expected}")]
    MemoryMismatch {
        path: String,
        index: usize,
        primitives: u64,
        expected: u64,
    },
    #[error("{path}: device resource {kind} must be positive")]
    DeviceResource { path: String, kind: String },
    #[error("{path}: label {index} ({op_id:?}): op id not in bundle")]
    LabelUnknownOp {
        path: String,
        index: usize,
        op_id: String,
    },
    #[error("{path}: label {index} ({op_id:?}): negative congestion value {value}")]
    LabelNegative {
        path: String,
        index: usize,
        op_id: String,
        value: f64,
    },
    #[error(
        "{path}: label {index} ({op_id:?}): avg mismatch: stored {stored}, (vert+horiz)/2 = {expected}"
    )]
    LabelAvgMismatch {
        path: String,
        index: usize,
        op_id: String,
        stored: f64,
        expected: f64,
    },
}

impl DesignBundle {
    /// Lookup table from op id to its index in `operations`.
    pub fn op_index(&self) -> HashMap<&str, usize> {
        self.operations
            .iter()
            .enumerate()
            .map(|(i, op)| (op.op_id.as_str(), i))
            .collect()
    }

    pub fn function(&self, function_id: &str) -> Option<&FunctionStats> {
        self.functions.iter().find(|f| f.function_id == function_id)
    }

    pub fn top_function(&self) -> &FunctionStats {
        self.functions
            .iter()
            .find(|f| f.is_top)
            .expect("validated bundle has a top function")
    }

    /// Sorts operations, edges, ports and functions into a canonical order.
    /// Serialization always canonicalizes first, so a bundle written twice
    /// from semantically equal data is byte identical.
    pub fn canonicalize(&mut self) {
        self.operations.sort_by(|a, b| a.op_id.cmp(&b.op_id));
        self.edges
            .sort_by(|a, b| (&a.src, &a.dst).cmp(&(&b.src, &b.dst)));
        self.ports.sort_by(|a, b| a.port_id.cmp(&b.port_id));
        self.functions
            .sort_by(|a, b| a.function_id.cmp(&b.function_id));
    }

    /// Runs every structural check. `path` is only used to report locations.
    pub fn validate(&self, path: &str) -> Result<(), BundleError> {
        let path = path.to_string();
        if self.schema_version != SCHEMA_VERSION {
            return Err(BundleError::SchemaVersion {
                path,
                found: self.schema_version.clone(),
            });
        }

        let mut seen = HashSet::new();
        for (index, op) in self.operations.iter().enumerate() {
            if !seen.insert(op.op_id.as_str()) {
                return Err(BundleError::DuplicateOp {
                    path,
                    index,
                    op_id: op.op_id.clone(),
                });
            }
        }

        let fn_ids: HashSet<&str> = self
            .functions
            .iter()
            .map(|f| f.function_id.as_str())
            .collect();
        if fn_ids.len() != self.functions.len() {
            let mut seen_fn = HashSet::new();
            for f in &self.functions {
                if !seen_fn.insert(f.function_id.as_str()) {
                    return Err(BundleError::InvalidFunction {
                        path,
                        function_id: f.function_id.clone(),
                        msg: "duplicate function id".into(),
                    });
                }
            }
        }

        let mut top: Option<&str> = None;
        for f in &self.functions {
            if f.is_top {
                if let Some(first) = top {
                    return Err(BundleError::MultipleTop {
                        path,
                        first: first.to_string(),
                        second: f.function_id.clone(),
                    });
                }
                top = Some(&f.function_id);
            }
            for (v, what) in [
                (f.target_clock_ns, "target_clock_ns"),
                (f.estimated_clock_ns, "estimated_clock_ns"),
                (f.clock_uncertainty_ns, "clock_uncertainty_ns"),
            ] {
                if !v.is_finite() || v < 0.0 {
                    return Err(BundleError::InvalidFunction {
                        path,
                        function_id: f.function_id.clone(),
                        msg: format!("{what} must be a non-negative finite number, got {v}"),
                    });
                }
            }
        }
        if top.is_none() {
            return Err(BundleError::MissingTop { path });
        }

        let index = self.op_index();
        for op in &self.operations {
            let fail = |msg: String| BundleError::InvalidOp {
                path: path.clone(),
                op_id: op.op_id.clone(),
                msg,
            };
            if op.bitwidth < 1 {
                return Err(fail("bitwidth must be >= 1".into()));
            }
            if !op.delay_ns.is_finite() || op.delay_ns < 0.0 {
                return Err(fail(format!(
                    "delay_ns must be a non-negative finite number, got {}",
                    op.delay_ns
                )));
            }
            if op.end_state < op.start_state {
                return Err(fail(format!(
                    "end_state {} < start_state {}",
                    op.end_state, op.start_state
                )));
            }
            if !fn_ids.contains(op.function_id.as_str()) {
                return Err(fail(format!(
                    "unknown function_id {:?}",
                    op.function_id
                )));
            }
        }

        for (i, e) in self.edges.iter().enumerate() {
            let dangling = |missing: &str| BundleError::DanglingOp {
                path: path.clone(),
                index: i,
                src: e.src.clone(),
                dst: e.dst.clone(),
                missing: missing.to_string(),
            };
            let src_idx = *index.get(e.src.as_str()).ok_or_else(|| dangling(&e.src))?;
            if !index.contains_key(e.dst.as_str()) {
                return Err(dangling(&e.dst));
            }
            let invalid = |msg: String| BundleError::InvalidEdge {
                path: path.clone(),
                index: i,
                src: e.src.clone(),
                dst: e.dst.clone(),
                msg,
            };
            if e.wire_count < 1 {
                return Err(invalid("wire_count must be >= 1".into()));
            }
            let src_bw = self.operations[src_idx].bitwidth;
            if e.wire_count > src_bw {
                return Err(invalid(format!(
                    "wire_count {} exceeds source bitwidth {}",
                    e.wire_count, src_bw
                )));
            }
        }

        let mut seen_ports = HashSet::new();
        for p in &self.ports {
            let fail = |msg: String| BundleError::InvalidPort {
                path: path.clone(),
                port_id: p.port_id.clone(),
                msg,
            };
            if !seen_ports.insert(p.port_id.as_str()) {
                return Err(fail("duplicate port id".into()));
            }
            if p.bitwidth < 1 {
                return Err(fail("bitwidth must be >= 1".into()));
            }
            for c in &p.connected_ops {
                if !index.contains_key(c.as_str()) {
                    return Err(fail(format!("connected op {c:?} not in bundle")));
                }
            }
        }

        for (i, m) in self.globals.memories.iter().enumerate() {
            let expected = m.words * m.bits * m.banks;
            if m.primitives != expected {
                return Err(BundleError::MemoryMismatch {
                    path,
                    index: i,
                    primitives: m.primitives,
                    expected,
                });
            }
        }
        for kind in ResourceKind::ALL {
            if self.globals.device_resources.get(kind) == 0 {
                return Err(BundleError::DeviceResource {
                    path,
                    kind: kind.name().to_string(),
                });
            }
        }

        Ok(())
    }
}

fn read_file(path: &Path) -> Result<String, BundleError> {
    fs::read_to_string(path).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads and fully validates a design bundle. Every failure names the file
/// and the offending entity; no partially constructed bundle escapes.
pub fn load_design_bundle(path: &Path) -> Result<DesignBundle, BundleError> {
    let text = read_file(path)?;
    let bundle: DesignBundle =
        serde_json::from_str(&text).map_err(|e| BundleError::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    bundle.validate(&path.display().to_string())?;
    Ok(bundle)
}

/// Writes a bundle in canonical order as pretty-printed JSON.
pub fn save_design_bundle(path: &Path, bundle: &DesignBundle) -> Result<(), BundleError> {
    let mut canonical = bundle.clone();
    canonical.canonicalize();
    let text = serde_json::to_string_pretty(&canonical).expect("bundle serializes");
    fs::write(path, text).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Validates label records against an already-loaded bundle. The stored
/// average is recomputed and must agree within [`AVG_TOLERANCE`].
pub fn validate_labels(
    labels: &[LabelRecord],
    bundle: &DesignBundle,
    path: &str,
) -> Result<(), BundleError> {
    let index = bundle.op_index();
    for (i, rec) in labels.iter().enumerate() {
        if !index.contains_key(rec.op_id.as_str()) {
            return Err(BundleError::LabelUnknownOp {
                path: path.to_string(),
                index: i,
                op_id: rec.op_id.clone(),
            });
        }
        for v in [rec.vert_cong_pct, rec.horiz_cong_pct] {
            if !v.is_finite() || v < 0.0 {
                return Err(BundleError::LabelNegative {
                    path: path.to_string(),
                    index: i,
                    op_id: rec.op_id.clone(),
                    value: v,
                });
            }
        }
        let expected = (rec.vert_cong_pct + rec.horiz_cong_pct) / 2.0;
        if !(rec.avg_cong_pct - expected).abs().le(&AVG_TOLERANCE) {
            return Err(BundleError::LabelAvgMismatch {
                path: path.to_string(),
                index: i,
                op_id: rec.op_id.clone(),
                stored: rec.avg_cong_pct,
                expected,
            });
        }
    }
    Ok(())
}

/// Loads a label file (a flat JSON array) and validates it against `bundle`.
pub fn load_labels(path: &Path, bundle: &DesignBundle) -> Result<Vec<LabelRecord>, BundleError> {
    let text = read_file(path)?;
    let labels: Vec<LabelRecord> =
        serde_json::from_str(&text).map_err(|e| BundleError::Parse {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
    validate_labels(&labels, bundle, &path.display().to_string())?;
    Ok(labels)
}

/// Writes label records sorted by (op_id, clb_x, clb_y).
pub fn save_labels(path: &Path, labels: &[LabelRecord]) -> Result<(), BundleError> {
    let mut sorted: Vec<LabelRecord> = labels.to_vec();
    sorted.sort_by(|a, b| (&a.op_id, a.clb_x, a.clb_y).cmp(&(&b.op_id, b.clb_x, b.clb_y)));
    let text = serde_json::to_string_pretty(&sorted).expect("labels serialize");
    fs::write(path, text).map_err(|source| BundleError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal_bundle() -> DesignBundle {
        DesignBundle {
            schema_version: SCHEMA_VERSION.to_string(),
            operations: vec![Operation {
                op_id: "op0".into(),
                op_type: OpType::Add,
                bitwidth: 32,
                delay_ns: 1.5,
                latency_cycles: 0,
                start_state: 0,
                end_state: 0,
                resource_usage: ResourceUsage::new(0, 0, 12, 8),
                rtl_instance: None,
                function_id: "main".into(),
                source_loc: None,
            }],
            edges: vec![],
            ports: vec![],
            functions: vec![FunctionStats {
                function_id: "main".into(),
                resource_usage: ResourceUsage::new(0, 0, 12, 8),
                target_clock_ns: 10.0,
                estimated_clock_ns: 8.7,
                clock_uncertainty_ns: 1.25,
                is_top: true,
            }],
            globals: GlobalStats {
                memories: vec![],
                muxes: MuxStats {
                    count: 0,
                    resource_usage: ResourceUsage::default(),
                    max_input_size: 0,
                    max_bitwidth: 0,
                },
                device_resources: ResourceUsage::new(220, 140, 53_200, 106_400),
            },
        }
    }

    #[test]
    fn minimal_bundle_is_valid() {
        minimal_bundle().validate("test").unwrap();
    }

    #[test]
    fn dangling_edge_dst_rejected() {
        let mut b = minimal_bundle();
        b.edges.push(Edge {
            src: "op0".into(),
            dst: "nope".into(),
            wire_count: 8,
        });
        let err = b.validate("test").unwrap_err();
        assert!(matches!(err, BundleError::DanglingOp { .. }), "{err}");
        assert!(err.to_string().contains("dangling op reference"));
    }

    #[test]
    fn multiple_top_functions_rejected() {
        let mut b = minimal_bundle();
        let mut second = b.functions[0].clone();
        second.function_id = "aux".into();
        b.functions.push(second);
        let err = b.validate("test").unwrap_err();
        assert!(matches!(err, BundleError::MultipleTop { .. }), "{err}");
        assert!(err.to_string().contains("multiple top functions"));
    }

    #[test]
    fn missing_top_rejected() {
        let mut b = minimal_bundle();
        b.functions[0].is_top = false;
        assert!(matches!(
            b.validate("test").unwrap_err(),
            BundleError::MissingTop { .. }
        ));
    }

    #[test]
    fn duplicate_op_rejected() {
        let mut b = minimal_bundle();
        b.operations.push(b.operations[0].clone());
        assert!(matches!(
            b.validate("test").unwrap_err(),
            BundleError::DuplicateOp { .. }
        ));
    }

    #[test]
    fn wire_count_exceeding_source_bitwidth_rejected() {
        let mut b = minimal_bundle();
        let mut op1 = b.operations[0].clone();
        op1.op_id = "op1".into();
        b.operations.push(op1);
        b.edges.push(Edge {
            src: "op0".into(),
            dst: "op1".into(),
            wire_count: 33,
        });
        assert!(matches!(
            b.validate("test").unwrap_err(),
            BundleError::InvalidEdge { .. }
        ));
    }

    #[test]
    fn memory_primitive_mismatch_rejected() {
        let mut b = minimal_bundle();
        b.globals.memories.push(MemoryStats {
            words: 4,
            banks: 2,
            bits: 8,
            primitives: 63,
        });
        assert!(matches!(
            b.validate("test").unwrap_err(),
            BundleError::MemoryMismatch { .. }
        ));
    }

    #[test]
    fn label_consistency() {
        let b = minimal_bundle();
        let ok = LabelRecord {
            op_id: "op0".into(),
            vert_cong_pct: 60.0,
            horiz_cong_pct: 80.0,
            avg_cong_pct: 70.0,
            clb_x: None,
            clb_y: None,
            replica_group: None,
        };
        validate_labels(&[ok.clone()], &b, "test").unwrap();

        let mut bad_avg = ok.clone();
        bad_avg.avg_cong_pct = 75.0;
        let err = validate_labels(&[bad_avg], &b, "test").unwrap_err();
        assert!(err.to_string().contains("avg mismatch"), "{err}");

        let mut unknown = ok.clone();
        unknown.op_id = "ghost".into();
        assert!(matches!(
            validate_labels(&[unknown], &b, "test").unwrap_err(),
            BundleError::LabelUnknownOp { .. }
        ));

        let mut negative = ok;
        negative.vert_cong_pct = -1.0;
        negative.avg_cong_pct = 39.5;
        assert!(matches!(
            validate_labels(&[negative], &b, "test").unwrap_err(),
            BundleError::LabelNegative { .. }
        ));
    }

    #[test]
    fn bundle_round_trip() {
        let dir = std::env::temp_dir().join("hls_congest_bundle_rt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("min.json");
        let mut b = minimal_bundle();
        // Out-of-order input must land identically after canonicalization.
        let mut op1 = b.operations[0].clone();
        op1.op_id = "aaa".into();
        b.operations.push(op1);
        save_design_bundle(&path, &b).unwrap();
        let loaded = load_design_bundle(&path).unwrap();
        let mut canon = b.clone();
        canon.canonicalize();
        assert_eq!(loaded, canon);

        // Byte-identical on rewrite.
        let first = std::fs::read(&path).unwrap();
        save_design_bundle(&path, &loaded).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
    }
}
