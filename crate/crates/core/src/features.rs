//! Fixed named feature schema and per-node feature extraction.
//!
//! Seven categories: bitwidth, interconnection, resource, timing,
//! resource-over-state-gap, operator type and global information. The schema
//! is a process-wide constant with a stable fingerprint; every extracted
//! vector is aligned to it. Ports are never samples, they only shape the
//! neighborhoods of real operations.
//!
//! Neighborhood conventions, applied uniformly and mirrored by the test
//! oracles:
//! * One-hop predecessor/successor sets are directed.
//! * Two-hop sets take one directed step followed by one undirected step,
//!   so `pred2 ∪ succ2` equals the undirected distance-2 neighborhood.
//! * Empty aggregates are 0, max over an empty set is 0, and every ratio
//!   with a zero denominator is 0.
//! * The state gap of an edge is `max(0, consumer start - producer end)`;
//!   quotient features divide by `gap + 1`. Nodes reached at two hops use
//!   the largest gap along the connecting path, minimized over paths;
//!   distance-1 nodes keep their direct-edge gap.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{DesignBundle, OpType, ResourceKind, ResourceUsage, SourceLoc};
use crate::depgraph::DepGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Bitwidth,
    Interconnection,
    Resource,
    Timing,
    ResOverDt,
    OpType,
    Global,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::Bitwidth,
        Category::Interconnection,
        Category::Resource,
        Category::Timing,
        Category::ResOverDt,
        Category::OpType,
        Category::Global,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Bitwidth => "bitwidth",
            Category::Interconnection => "interconnection",
            Category::Resource => "resource",
            Category::Timing => "timing",
            Category::ResOverDt => "res_over_dt",
            Category::OpType => "optype",
            Category::Global => "global",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct FeatureDef {
    pub name: String,
    pub category: Category,
}

/// Ordered, named feature set. Built once per process; the fingerprint is a
/// stable FNV-1a hash of the ordered names, so it changes iff the name list
/// changes.
#[derive(Debug)]
pub struct FeatureSchema {
    entries: Vec<FeatureDef>,
    fingerprint: String,
    index: HashMap<String, usize>,
}

impl FeatureSchema {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[FeatureDef] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn category_of(&self, idx: usize) -> Category {
        self.entries[idx].category
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn build_schema() -> FeatureSchema {
    let mut entries: Vec<FeatureDef> = Vec::new();
    let mut push = |name: String, category: Category| {
        entries.push(FeatureDef { name, category });
    };

    push("bitwidth".into(), Category::Bitwidth);

    const INTERCONN: [&str; 9] = [
        "fan_in",
        "fan_out",
        "fan_sum",
        "num_preds",
        "num_succs",
        "num_neighbors",
        "max_wire",
        "fanin_max_wire_pct_in",
        "fanout_max_wire_pct_out",
    ];
    for hop in ["", "twohop_"] {
        for m in INTERCONN {
            push(format!("{hop}{m}"), Category::Interconnection);
        }
    }

    for kind in ResourceKind::ALL {
        let t = kind.name();
        push(format!("{t}_usage"), Category::Resource);
        push(format!("{t}_dev_ratio"), Category::Resource);
        push(format!("{t}_fn_ratio"), Category::Resource);
        for hop in ["", "twohop_"] {
            for side in ["pred", "succ", "nbr"] {
                push(format!("{t}_{hop}{side}_usage_sum"), Category::Resource);
                push(format!("{t}_{hop}{side}_dev_ratio_sum"), Category::Resource);
                push(format!("{t}_{hop}{side}_fn_ratio_sum"), Category::Resource);
            }
            push(format!("{t}_{hop}nbr_max_usage"), Category::Resource);
            push(format!("{t}_{hop}nbr_max_usage_pct"), Category::Resource);
        }
    }

    push("delay_ns".into(), Category::Timing);
    push("latency_cycles".into(), Category::Timing);

    for kind in ResourceKind::ALL {
        let t = kind.name();
        for hop in ["", "twohop_"] {
            for side in ["pred", "succ"] {
                push(format!("{t}_{hop}{side}_usage_per_dt"), Category::ResOverDt);
                push(
                    format!("{t}_{hop}{side}_dev_ratio_per_dt"),
                    Category::ResOverDt,
                );
                push(
                    format!("{t}_{hop}{side}_fn_ratio_per_dt"),
                    Category::ResOverDt,
                );
            }
        }
    }

    for t in OpType::ALL {
        push(format!("is_{}", t.name()), Category::OpType);
    }
    for t in OpType::ALL {
        push(format!("nbr_count_{}", t.name()), Category::OpType);
    }

    for kind in ResourceKind::ALL {
        push(format!("ftop_usage_{}", kind.name()), Category::Global);
    }
    for kind in ResourceKind::ALL {
        push(format!("fop_usage_{}", kind.name()), Category::Global);
    }
    for kind in ResourceKind::ALL {
        push(format!("fop_pct_ftop_{}", kind.name()), Category::Global);
    }
    for f in ["ftop", "fop"] {
        push(format!("{f}_target_clock_ns"), Category::Global);
        push(format!("{f}_estimated_clock_ns"), Category::Global);
        push(format!("{f}_clock_uncertainty_ns"), Category::Global);
    }
    for m in ["words", "banks", "bits", "primitives"] {
        push(format!("mem_total_{m}"), Category::Global);
    }
    push("mux_count".into(), Category::Global);
    push("mux_resource_total".into(), Category::Global);
    push("mux_max_input_size".into(), Category::Global);
    push("mux_max_bitwidth".into(), Category::Global);

    let joined: Vec<u8> = entries
        .iter()
        .flat_map(|e| e.name.bytes().chain(std::iter::once(b'\n')))
        .collect();
    let fingerprint = format!("{:016x}", fnv1a64(&joined));
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.name.clone(), i))
        .collect();
    FeatureSchema {
        entries,
        fingerprint,
        index,
    }
}

/// The process-wide feature schema.
pub fn schema() -> &'static FeatureSchema {
    static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
    SCHEMA.get_or_init(build_schema)
}

/// One extracted sample-side record: values aligned with [`schema`], plus
/// the identity of the operation it describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub op_id: String,
    pub function_id: String,
    pub source_loc: Option<SourceLoc>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ExtractConfig {
    /// Drop port nodes from every neighborhood, as if the graph had no
    /// port nodes at all.
    pub exclude_ports: bool,
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("node {0}: ports are not samples")]
    PortNotSample(usize),
    #[error("unknown node id {0}")]
    UnknownNode(usize),
}

struct FnInfo {
    resources: ResourceUsage,
    target_clock_ns: f64,
    estimated_clock_ns: f64,
    clock_uncertainty_ns: f64,
}

struct GlobalCtx {
    device: ResourceUsage,
    top_id: String,
    fns: HashMap<String, FnInfo>,
    mem_totals: [f64; 4],
    mux: [f64; 4],
}

/// Per-bundle extractor; cheap to query repeatedly, safe to share across
/// threads.
pub struct Extractor<'a> {
    graph: &'a DepGraph,
    bundle: &'a DesignBundle,
    cfg: ExtractConfig,
    ctx: GlobalCtx,
}

fn state_gap(producer_end: u32, consumer_start: u32) -> u64 {
    i64::from(consumer_start)
        .saturating_sub(i64::from(producer_end))
        .max(0) as u64
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

impl<'a> Extractor<'a> {
    pub fn new(graph: &'a DepGraph, bundle: &'a DesignBundle, cfg: ExtractConfig) -> Self {
        let fns = bundle
            .functions
            .iter()
            .map(|f| {
                (
                    f.function_id.clone(),
                    FnInfo {
                        resources: f.resource_usage,
                        target_clock_ns: f.target_clock_ns,
                        estimated_clock_ns: f.estimated_clock_ns,
                        clock_uncertainty_ns: f.clock_uncertainty_ns,
                    },
                )
            })
            .collect();
        let mut mem_totals = [0.0; 4];
        for m in &bundle.globals.memories {
            mem_totals[0] += m.words as f64;
            mem_totals[1] += m.banks as f64;
            mem_totals[2] += m.bits as f64;
            mem_totals[3] += m.primitives as f64;
        }
        let mux = &bundle.globals.muxes;
        Extractor {
            graph,
            bundle,
            cfg,
            ctx: GlobalCtx {
                device: bundle.globals.device_resources,
                top_id: bundle.top_function().function_id.clone(),
                fns,
                mem_totals,
                mux: [
                    mux.count as f64,
                    mux.resource_usage.total() as f64,
                    mux.max_input_size as f64,
                    mux.max_bitwidth as f64,
                ],
            },
        }
    }

    pub fn config(&self) -> ExtractConfig {
        self.cfg
    }

    pub fn graph(&self) -> &DepGraph {
        self.graph
    }

    fn keep(&self, node: usize) -> bool {
        !(self.cfg.exclude_ports && self.graph.is_port(node))
    }

    fn in_list(&self, node: usize) -> Vec<(usize, u64)> {
        self.graph
            .in_edges(node)
            .iter()
            .copied()
            .filter(|&(s, _)| self.keep(s))
            .collect()
    }

    fn out_list(&self, node: usize) -> Vec<(usize, u64)> {
        self.graph
            .out_edges(node)
            .iter()
            .copied()
            .filter(|&(t, _)| self.keep(t))
            .collect()
    }

    fn usage(&self, node: usize, kind: ResourceKind) -> f64 {
        self.graph.nodes()[node].attrs.resources.get(kind) as f64
    }

    fn dev_ratio(&self, node: usize, kind: ResourceKind) -> f64 {
        // Device resources are validated positive.
        self.usage(node, kind) / self.ctx.device.get(kind) as f64
    }

    fn fn_ratio(&self, node: usize, kind: ResourceKind) -> f64 {
        match &self.graph.nodes()[node].attrs.function_id {
            Some(f) => ratio(
                self.usage(node, kind),
                self.ctx.fns[f].resources.get(kind) as f64,
            ),
            None => 0.0,
        }
    }

    /// Expand a directed one-hop set by one undirected step. The second hop
    /// ignores direction; `n` itself is never a neighbor.
    fn expand_undirected(&self, n: usize, first: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = first.clone();
        for &m in first {
            for &(u, _) in self.graph.in_edges(m).iter().chain(self.graph.out_edges(m)) {
                if u != n && self.keep(u) {
                    out.insert(u);
                }
            }
        }
        out
    }

    /// State-gap map for the two-hop cone on one side. Direct neighbors keep
    /// their direct gap; distance-2 nodes take the minimum over connecting
    /// paths of the larger per-edge gap on the path.
    fn two_hop_gaps(
        &self,
        n: usize,
        direct: &[(usize, u64)],
        pred_side: bool,
    ) -> BTreeMap<usize, u64> {
        let attrs = |v: usize| &self.graph.nodes()[v].attrs;
        let edge_gap = |src: usize, dst: usize| state_gap(attrs(src).end_state, attrs(dst).start_state);
        let mut gaps: BTreeMap<usize, u64> = BTreeMap::new();
        let direct_gap = |m: usize| {
            if pred_side {
                edge_gap(m, n)
            } else {
                edge_gap(n, m)
            }
        };
        let direct_set: BTreeSet<usize> = direct.iter().map(|&(m, _)| m).collect();
        for &m in &direct_set {
            let g1 = direct_gap(m);
            for &(u, _) in self.graph.in_edges(m).iter() {
                if u != n && self.keep(u) && !direct_set.contains(&u) {
                    let cand = g1.max(edge_gap(u, m));
                    gaps.entry(u).and_modify(|g| *g = (*g).min(cand)).or_insert(cand);
                }
            }
            for &(u, _) in self.graph.out_edges(m).iter() {
                if u != n && self.keep(u) && !direct_set.contains(&u) {
                    let cand = g1.max(edge_gap(m, u));
                    gaps.entry(u).and_modify(|g| *g = (*g).min(cand)).or_insert(cand);
                }
            }
        }
        for &m in &direct_set {
            gaps.insert(m, direct_gap(m));
        }
        gaps
    }

    /// Extracts the raw value vector for a non-port node.
    pub fn extract_node(&self, n: usize) -> Result<Vec<f64>, FeatureError> {
        let node = self
            .graph
            .nodes()
            .get(n)
            .ok_or(FeatureError::UnknownNode(n))?;
        if self.graph.is_port(n) {
            return Err(FeatureError::PortNotSample(n));
        }
        let attrs = &node.attrs;
        let sch = schema();
        let mut v: Vec<f64> = Vec::with_capacity(sch.len());

        v.push(f64::from(attrs.bitwidth));

        // Interconnection.
        let in1 = self.in_list(n);
        let out1 = self.out_list(n);
        let p1: BTreeSet<usize> = in1.iter().map(|&(s, _)| s).collect();
        let s1: BTreeSet<usize> = out1.iter().map(|&(t, _)| t).collect();
        let p2 = self.expand_undirected(n, &p1);
        let s2 = self.expand_undirected(n, &s1);

        let sum_w = |edges: &[(usize, u64)]| edges.iter().map(|&(_, w)| w as f64).sum::<f64>();
        let max_w = |edges: &[(usize, u64)]| {
            edges.iter().map(|&(_, w)| w as f64).fold(0.0, f64::max)
        };

        let fan_in = sum_w(&in1);
        let fan_out = sum_w(&out1);
        let max_wire_in = max_w(&in1);
        let max_wire_out = max_w(&out1);
        v.push(fan_in);
        v.push(fan_out);
        v.push(fan_in + fan_out);
        v.push(p1.len() as f64);
        v.push(s1.len() as f64);
        v.push((p1.len() + s1.len()) as f64);
        v.push(max_wire_in.max(max_wire_out));
        v.push(ratio(max_wire_in, fan_in));
        v.push(ratio(max_wire_out, fan_out));

        // Two-hop interconnection accumulates the same quantities one more
        // level out: the in-wires of n plus the in-wires of its preds, and
        // symmetrically for the out side.
        let mut fan_in2 = fan_in;
        let mut max_wire_in2 = max_wire_in;
        for &p in &p1 {
            let list = self.in_list(p);
            fan_in2 += sum_w(&list);
            max_wire_in2 = max_wire_in2.max(max_w(&list));
        }
        let mut fan_out2 = fan_out;
        let mut max_wire_out2 = max_wire_out;
        for &s in &s1 {
            let list = self.out_list(s);
            fan_out2 += sum_w(&list);
            max_wire_out2 = max_wire_out2.max(max_w(&list));
        }
        v.push(fan_in2);
        v.push(fan_out2);
        v.push(fan_in2 + fan_out2);
        v.push(p2.len() as f64);
        v.push(s2.len() as f64);
        v.push((p2.len() + s2.len()) as f64);
        v.push(max_wire_in2.max(max_wire_out2));
        v.push(ratio(max_wire_in2, fan_in2));
        v.push(ratio(max_wire_out2, fan_out2));

        // Resource.
        for kind in ResourceKind::ALL {
            v.push(self.usage(n, kind));
            v.push(self.dev_ratio(n, kind));
            v.push(self.fn_ratio(n, kind));
            for (preds, succs) in [(&p1, &s1), (&p2, &s2)] {
                let agg = |set: &BTreeSet<usize>, f: &dyn Fn(usize) -> f64| {
                    set.iter().map(|&u| f(u)).sum::<f64>()
                };
                let pred_usage = agg(preds, &|u| self.usage(u, kind));
                let pred_dev = agg(preds, &|u| self.dev_ratio(u, kind));
                let pred_fn = agg(preds, &|u| self.fn_ratio(u, kind));
                let succ_usage = agg(succs, &|u| self.usage(u, kind));
                let succ_dev = agg(succs, &|u| self.dev_ratio(u, kind));
                let succ_fn = agg(succs, &|u| self.fn_ratio(u, kind));
                let max_usage = preds
                    .union(succs)
                    .map(|&u| self.usage(u, kind))
                    .fold(0.0, f64::max);
                v.push(pred_usage);
                v.push(pred_dev);
                v.push(pred_fn);
                v.push(succ_usage);
                v.push(succ_dev);
                v.push(succ_fn);
                v.push(pred_usage + succ_usage);
                v.push(pred_dev + succ_dev);
                v.push(pred_fn + succ_fn);
                v.push(max_usage);
                v.push(ratio(max_usage, pred_usage + succ_usage));
            }
        }

        // Timing.
        v.push(attrs.delay_ns);
        v.push(f64::from(attrs.latency_cycles));

        // Resource over state gap.
        let gap_in: Vec<(usize, u64)> = in1
            .iter()
            .map(|&(p, _)| {
                (
                    p,
                    state_gap(self.graph.nodes()[p].attrs.end_state, attrs.start_state),
                )
            })
            .collect();
        let gap_out: Vec<(usize, u64)> = out1
            .iter()
            .map(|&(s, _)| {
                (
                    s,
                    state_gap(attrs.end_state, self.graph.nodes()[s].attrs.start_state),
                )
            })
            .collect();
        let gap_in2 = self.two_hop_gaps(n, &in1, true);
        let gap_out2 = self.two_hop_gaps(n, &out1, false);
        for kind in ResourceKind::ALL {
            let quot = |pairs: &mut dyn Iterator<Item = (usize, u64)>, f: &dyn Fn(usize) -> f64| {
                pairs.map(|(u, g)| f(u) / (g + 1) as f64).sum::<f64>()
            };
            for pairs in [&gap_in, &gap_out] {
                v.push(quot(&mut pairs.iter().copied(), &|u| self.usage(u, kind)));
                v.push(quot(&mut pairs.iter().copied(), &|u| self.dev_ratio(u, kind)));
                v.push(quot(&mut pairs.iter().copied(), &|u| self.fn_ratio(u, kind)));
            }
            for pairs in [&gap_in2, &gap_out2] {
                v.push(quot(
                    &mut pairs.iter().map(|(&u, &g)| (u, g)),
                    &|u| self.usage(u, kind),
                ));
                v.push(quot(
                    &mut pairs.iter().map(|(&u, &g)| (u, g)),
                    &|u| self.dev_ratio(u, kind),
                ));
                v.push(quot(
                    &mut pairs.iter().map(|(&u, &g)| (u, g)),
                    &|u| self.fn_ratio(u, kind),
                ));
            }
        }

        // Operator type: own one-hot, then per-type counts over the distinct
        // one-hop operation neighbors (ports carry no type).
        let own = attrs.op_type.expect("non-port node has a type");
        for t in OpType::ALL {
            v.push(if t == own { 1.0 } else { 0.0 });
        }
        let mut counts = [0u32; OpType::ALL.len()];
        for &u in p1.union(&s1) {
            if let Some(t) = self.graph.nodes()[u].attrs.op_type {
                counts[t.index()] += 1;
            }
        }
        for c in counts {
            v.push(f64::from(c));
        }

        // Global.
        let top = &self.ctx.fns[&self.ctx.top_id];
        let own_fn = &self.ctx.fns[attrs
            .function_id
            .as_ref()
            .expect("non-port node has a function")];
        for kind in ResourceKind::ALL {
            v.push(top.resources.get(kind) as f64);
        }
        for kind in ResourceKind::ALL {
            v.push(own_fn.resources.get(kind) as f64);
        }
        for kind in ResourceKind::ALL {
            v.push(ratio(
                own_fn.resources.get(kind) as f64,
                top.resources.get(kind) as f64,
            ));
        }
        for f in [top, own_fn] {
            v.push(f.target_clock_ns);
            v.push(f.estimated_clock_ns);
            v.push(f.clock_uncertainty_ns);
        }
        v.extend_from_slice(&self.ctx.mem_totals);
        v.extend_from_slice(&self.ctx.mux);

        debug_assert_eq!(v.len(), sch.len());
        debug_assert!(v.iter().all(|x| x.is_finite()));
        Ok(v)
    }

    /// One feature vector per operation, in bundle order. Member operations
    /// of a merged node share the node's values but keep their own identity.
    pub fn extract_all(&self) -> Vec<FeatureVector> {
        let per_node: HashMap<usize, Vec<f64>> = (0..self.graph.node_count())
            .into_par_iter()
            .filter(|&id| !self.graph.is_port(id))
            .map(|id| (id, self.extract_node(id).expect("non-port node extracts")))
            .collect();
        self.bundle
            .operations
            .iter()
            .map(|op| {
                let node = self.graph.node_of_op(&op.op_id).expect("op has a node");
                FeatureVector {
                    values: per_node[&node].clone(),
                    op_id: op.op_id.clone(),
                    function_id: op.function_id.clone(),
                    source_loc: op.source_loc.clone(),
                }
            })
            .collect()
    }

    /// Matrix dump: header of schema names, one row per non-port node keyed
    /// by its first member operation.
    pub fn write_matrix_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "op_id")?;
        for name in schema().names() {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for node in self.graph.nodes() {
            if node.kind == crate::depgraph::NodeKind::Port {
                continue;
            }
            let values = self.extract_node(node.node_id).expect("non-port node");
            write!(w, "{}", node.member_ops[0])?;
            for x in values {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{
        Edge, FunctionStats, GlobalStats, MuxStats, Operation, SCHEMA_VERSION,
    };
    use crate::depgraph::build_graph;

    fn bundle_with(ops: Vec<Operation>, edges: Vec<Edge>) -> DesignBundle {
        DesignBundle {
            schema_version: SCHEMA_VERSION.to_string(),
            operations: ops,
            edges,
            ports: vec![],
            functions: vec![FunctionStats {
                function_id: "main".into(),
                resource_usage: ResourceUsage::new(10, 10, 100, 100),
                target_clock_ns: 10.0,
                estimated_clock_ns: 9.0,
                clock_uncertainty_ns: 1.25,
                is_top: true,
            }],
            globals: GlobalStats {
                memories: vec![],
                muxes: MuxStats {
                    count: 3,
                    resource_usage: ResourceUsage::new(0, 0, 24, 12),
                    max_input_size: 4,
                    max_bitwidth: 32,
                },
                device_resources: ResourceUsage::new(220, 140, 53_200, 106_400),
            },
        }
    }

    fn op(id: &str, ty: OpType, bw: u32, start: u32, end: u32, lut: u64) -> Operation {
        Operation {
            op_id: id.into(),
            op_type: ty,
            bitwidth: bw,
            delay_ns: 1.0,
            latency_cycles: end - start,
            start_state: start,
            end_state: end,
            resource_usage: ResourceUsage::new(0, 0, lut, 0),
            rtl_instance: None,
            function_id: "main".into(),
            source_loc: None,
        }
    }

    #[test]
    fn schema_shape() {
        let s = schema();
        assert_eq!(s.len(), 225);
        let count = |c: Category| s.entries().iter().filter(|e| e.category == c).count();
        assert_eq!(count(Category::Bitwidth), 1);
        assert_eq!(count(Category::Interconnection), 18);
        assert_eq!(count(Category::Resource), 100);
        assert_eq!(count(Category::Timing), 2);
        assert_eq!(count(Category::ResOverDt), 48);
        assert_eq!(count(Category::OpType), 30);
        assert_eq!(count(Category::Global), 26);

        let idx = s.position("fanin_max_wire_pct_in").expect("present");
        assert_eq!(s.category_of(idx), Category::Interconnection);

        // Names unique.
        let names: std::collections::HashSet<&str> = s.names().collect();
        assert_eq!(names.len(), s.len());
    }

    #[test]
    fn fingerprint_deterministic() {
        assert_eq!(schema().fingerprint(), schema().fingerprint());
        assert_eq!(schema().fingerprint().len(), 16);
    }

    #[test]
    fn isolated_add_has_empty_aggregates() {
        let b = bundle_with(vec![op("a", OpType::Add, 32, 0, 0, 7)], vec![]);
        b.validate("test").unwrap();
        let g = build_graph(&b);
        let ex = Extractor::new(&g, &b, ExtractConfig::default());
        let v = ex.extract_node(0).unwrap();
        let s = schema();
        let at = |name: &str| v[s.position(name).unwrap()];
        assert_eq!(at("bitwidth"), 32.0);
        assert_eq!(at("fan_in"), 0.0);
        assert_eq!(at("fan_out"), 0.0);
        assert_eq!(at("num_neighbors"), 0.0);
        assert_eq!(at("twohop_num_neighbors"), 0.0);
        assert_eq!(at("lut_pred_usage_sum"), 0.0);
        assert_eq!(at("lut_nbr_max_usage_pct"), 0.0);
        assert_eq!(at("lut_pred_usage_per_dt"), 0.0);
        assert_eq!(at("is_add"), 1.0);
        assert_eq!(at("is_mul"), 0.0);
        assert_eq!(at("lut_usage"), 7.0);
    }

    #[test]
    fn max_wire_percentages() {
        let b = bundle_with(
            vec![
                op("p1", OpType::Load, 8, 0, 1, 2),
                op("p2", OpType::Load, 32, 0, 1, 2),
                op("n", OpType::Add, 32, 2, 2, 5),
            ],
            vec![
                Edge {
                    src: "p1".into(),
                    dst: "n".into(),
                    wire_count: 8,
                },
                Edge {
                    src: "p2".into(),
                    dst: "n".into(),
                    wire_count: 24,
                },
            ],
        );
        b.validate("test").unwrap();
        let g = build_graph(&b);
        let ex = Extractor::new(&g, &b, ExtractConfig::default());
        let v = ex.extract_node(g.node_of_op("n").unwrap()).unwrap();
        let s = schema();
        let at = |name: &str| v[s.position(name).unwrap()];
        assert_eq!(at("fan_in"), 32.0);
        assert_eq!(at("max_wire"), 24.0);
        assert_eq!(at("fanin_max_wire_pct_in"), 0.75);
        assert_eq!(at("fanout_max_wire_pct_out"), 0.0);
    }

    #[test]
    fn successor_quotient_uses_gap_plus_one() {
        // Producer ends in state 2, consumer starts in state 5, consumer
        // uses 12 LUTs: successor term is 12 / (3 + 1).
        let b = bundle_with(
            vec![op("prod", OpType::Mul, 32, 0, 2, 3), op("cons", OpType::Add, 32, 5, 5, 12)],
            vec![Edge {
                src: "prod".into(),
                dst: "cons".into(),
                wire_count: 32,
            }],
        );
        b.validate("test").unwrap();
        let g = build_graph(&b);
        let ex = Extractor::new(&g, &b, ExtractConfig::default());
        let v = ex.extract_node(g.node_of_op("prod").unwrap()).unwrap();
        let s = schema();
        assert_eq!(v[s.position("lut_succ_usage_per_dt").unwrap()], 3.0);
        // Same-state chaining degenerates to gap 0, denominator 1.
        let w = ex.extract_node(g.node_of_op("cons").unwrap()).unwrap();
        assert_eq!(w[s.position("lut_pred_usage_per_dt").unwrap()], 3.0 / 4.0);
    }

    #[test]
    fn port_node_is_not_a_sample() {
        let mut b = bundle_with(vec![op("a", OpType::Add, 32, 0, 0, 1)], vec![]);
        b.ports.push(crate::bundle::PortDecl {
            port_id: "in0".into(),
            connected_ops: vec!["a".into()],
            bitwidth: 32,
        });
        b.validate("test").unwrap();
        let g = build_graph(&b);
        let ex = Extractor::new(&g, &b, ExtractConfig::default());
        let p = g.node_of_port("in0").unwrap();
        assert!(matches!(
            ex.extract_node(p),
            Err(FeatureError::PortNotSample(_))
        ));
    }

    #[test]
    fn exclude_ports_removes_port_influence() {
        let mut b = bundle_with(vec![op("a", OpType::Add, 32, 0, 0, 1)], vec![]);
        b.ports.push(crate::bundle::PortDecl {
            port_id: "in0".into(),
            connected_ops: vec!["a".into()],
            bitwidth: 32,
        });
        let g = build_graph(&b);
        let s = schema();
        let with = Extractor::new(&g, &b, ExtractConfig { exclude_ports: false });
        let without = Extractor::new(&g, &b, ExtractConfig { exclude_ports: true });
        let na = g.node_of_op("a").unwrap();
        let v_with = with.extract_node(na).unwrap();
        let v_without = without.extract_node(na).unwrap();
        assert_eq!(v_with[s.position("fan_in").unwrap()], 32.0);
        assert_eq!(v_without[s.position("fan_in").unwrap()], 0.0);
        assert_eq!(v_without[s.position("num_preds").unwrap()], 0.0);
    }

    #[test]
    fn merged_members_share_one_vector() {
        let mut ops = vec![
            op("x", OpType::Load, 32, 0, 1, 2),
            op("m1", OpType::Mul, 32, 2, 3, 10),
            op("m2", OpType::Mul, 32, 2, 3, 10),
        ];
        ops[1].rtl_instance = Some("mul_u0".into());
        ops[2].rtl_instance = Some("mul_u0".into());
        let b = bundle_with(
            ops,
            vec![
                Edge {
                    src: "x".into(),
                    dst: "m1".into(),
                    wire_count: 8,
                },
                Edge {
                    src: "x".into(),
                    dst: "m2".into(),
                    wire_count: 8,
                },
            ],
        );
        b.validate("test").unwrap();
        let g = build_graph(&b);
        let ex = Extractor::new(&g, &b, ExtractConfig::default());
        let all = ex.extract_all();
        assert_eq!(all.len(), 3);
        let v1 = &all.iter().find(|f| f.op_id == "m1").unwrap().values;
        let v2 = &all.iter().find(|f| f.op_id == "m2").unwrap().values;
        assert_eq!(v1, v2);
        let s = schema();
        assert_eq!(v1[s.position("lut_usage").unwrap()], 20.0);
    }
}
