//! Shared helpers for integration and acceptance tests: a random-bundle
//! generator and naive brute-force oracles that recompute neighborhoods and
//! feature aggregates by scanning flat edge lists, independent of the
//! adjacency structures the library uses.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hls_congest::bundle::{
    DesignBundle, Edge, FunctionStats, GlobalStats, MemoryStats, MuxStats, Operation, OpType,
    PortDecl, ResourceKind, ResourceUsage, SourceLoc, SCHEMA_VERSION,
};
use hls_congest::depgraph::{DepGraph, NodeKind};
use hls_congest::features::{schema, ExtractConfig};

/// Random valid bundle with optional sharing groups, ports, parallel edges
/// and multi-function structure.
pub fn random_bundle(seed: u64, max_ops: usize, with_sharing: bool) -> DesignBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_ops = rng.random_range(1..=max_ops.max(1));
    let n_fns = rng.random_range(1..=2usize);
    let types = [
        OpType::Add,
        OpType::Mul,
        OpType::Load,
        OpType::Store,
        OpType::Icmp,
        OpType::Xor,
        OpType::Select,
        OpType::Shift,
    ];
    let mut operations: Vec<Operation> = (0..n_ops)
        .map(|i| {
            let bw = *[8u32, 16, 32, 64].get(rng.random_range(0..4)).unwrap();
            let t = types[rng.random_range(0..types.len())];
            let start = rng.random_range(0..12u32);
            Operation {
                op_id: format!("op{i}"),
                op_type: t,
                bitwidth: bw,
                delay_ns: rng.random_range(0.5..9.0),
                latency_cycles: rng.random_range(0..4),
                start_state: start,
                end_state: start + rng.random_range(0..4),
                resource_usage: ResourceUsage::new(
                    rng.random_range(0..4),
                    rng.random_range(0..3),
                    rng.random_range(0..80),
                    rng.random_range(0..120),
                ),
                rtl_instance: None,
                function_id: format!("f{}", i % n_fns),
                source_loc: if rng.random_bool(0.8) {
                    Some(SourceLoc {
                        file: "t.c".into(),
                        line: rng.random_range(1..40),
                    })
                } else {
                    None
                },
            }
        })
        .collect();

    if with_sharing && n_ops >= 4 {
        let n_groups = rng.random_range(1..=(n_ops / 4).max(1));
        let mut pool: Vec<usize> = (0..n_ops).collect();
        for g in 0..n_groups {
            if pool.len() < 2 {
                break;
            }
            let size = rng.random_range(2..=3.min(pool.len()));
            let rtl = format!("shared_u{g}");
            for _ in 0..size {
                let pick = rng.random_range(0..pool.len());
                let idx = pool.swap_remove(pick);
                operations[idx].rtl_instance = Some(rtl.clone());
            }
        }
    }

    let n_edges = rng.random_range(0..=(n_ops * 2));
    let edges: Vec<Edge> = (0..n_edges)
        .map(|_| {
            let src = rng.random_range(0..n_ops);
            let dst = rng.random_range(0..n_ops);
            Edge {
                src: format!("op{src}"),
                dst: format!("op{dst}"),
                wire_count: rng.random_range(1..=operations[src].bitwidth),
            }
        })
        .collect();

    let mut ports = Vec::new();
    for p in 0..rng.random_range(0..=3usize) {
        let count = rng.random_range(1..=n_ops.min(4));
        let mut connected: Vec<String> = (0..count)
            .map(|_| format!("op{}", rng.random_range(0..n_ops)))
            .collect();
        connected.dedup();
        ports.push(PortDecl {
            port_id: format!("port{p}"),
            connected_ops: connected,
            bitwidth: *[8u32, 16, 32].get(rng.random_range(0..3)).unwrap(),
        });
    }

    let functions: Vec<FunctionStats> = (0..n_fns)
        .map(|f| {
            let mut usage = ResourceUsage::default();
            for op in operations.iter().filter(|o| o.function_id == format!("f{f}")) {
                usage.add(&op.resource_usage);
            }
            FunctionStats {
                function_id: format!("f{f}"),
                resource_usage: usage,
                target_clock_ns: 10.0,
                estimated_clock_ns: rng.random_range(6.0..14.0),
                clock_uncertainty_ns: 1.25,
                is_top: f == 0,
            }
        })
        .collect();

    let mut bundle = DesignBundle {
        schema_version: SCHEMA_VERSION.to_string(),
        operations,
        edges,
        ports,
        functions,
        globals: GlobalStats {
            memories: vec![MemoryStats {
                words: 16,
                banks: 2,
                bits: 32,
                primitives: 16 * 32 * 2,
            }],
            muxes: MuxStats {
                count: 5,
                resource_usage: ResourceUsage::new(0, 0, 40, 10),
                max_input_size: 4,
                max_bitwidth: 64,
            },
            device_resources: ResourceUsage::new(220, 140, 53_200, 106_400),
        },
    };
    bundle.canonicalize();
    bundle.validate("random_bundle").expect("generated bundle is valid");
    bundle
}

/// Flat copy of a dependency graph for naive recomputation: node attributes
/// plus an unindexed edge list.
pub struct FlatGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
    pub is_port: Vec<bool>,
}

impl FlatGraph {
    pub fn from_graph(g: &DepGraph) -> FlatGraph {
        let n = g.node_count();
        let mut edges = Vec::new();
        for s in 0..n {
            for &(t, w) in g.out_edges(s) {
                edges.push((s, t, w));
            }
        }
        FlatGraph {
            n,
            edges,
            is_port: (0..n).map(|i| g.nodes()[i].kind == NodeKind::Port).collect(),
        }
    }

    pub fn preds(&self, n: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|&&(_, t, _)| t == n)
            .map(|&(s, _, _)| s)
            .collect()
    }

    pub fn succs(&self, n: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|&&(s, _, _)| s == n)
            .map(|&(_, t, _)| t)
            .collect()
    }

    /// Undirected breadth-first neighborhood at distance <= depth.
    pub fn undirected_within(&self, n: usize, depth: usize) -> BTreeSet<usize> {
        let mut frontier = BTreeSet::from([n]);
        let mut seen = BTreeSet::from([n]);
        for _ in 0..depth {
            let mut next = BTreeSet::new();
            for &v in &frontier {
                for &(s, t, _) in &self.edges {
                    if s == v && seen.insert(t) {
                        next.insert(t);
                    }
                    if t == v && seen.insert(s) {
                        next.insert(s);
                    }
                }
            }
            frontier = next;
        }
        seen.remove(&n);
        seen
    }
}

/// Brute-force recomputation of the full feature vector of one node,
/// scanning the flat edge list with nested loops. Definitions mirror the
/// documented conventions; code paths and data structures do not.
pub fn naive_features(
    g: &DepGraph,
    bundle: &DesignBundle,
    node: usize,
    cfg: ExtractConfig,
) -> Vec<f64> {
    let flat = FlatGraph::from_graph(g);
    let nodes = g.nodes();
    let keep = |v: usize| !(cfg.exclude_ports && flat.is_port[v]);
    let edges: Vec<(usize, usize, u64)> = flat
        .edges
        .iter()
        .copied()
        .filter(|&(s, t, _)| keep(s) && keep(t))
        .collect();

    let usage = |v: usize, k: ResourceKind| nodes[v].attrs.resources.get(k) as f64;
    let device = |k: ResourceKind| bundle.globals.device_resources.get(k) as f64;
    let fn_usage = |v: usize, k: ResourceKind| -> f64 {
        match &nodes[v].attrs.function_id {
            Some(f) => bundle.function(f).unwrap().resource_usage.get(k) as f64,
            None => 0.0,
        }
    };
    let dev_ratio = |v: usize, k: ResourceKind| usage(v, k) / device(k);
    let fn_ratio = |v: usize, k: ResourceKind| {
        let d = fn_usage(v, k);
        if d > 0.0 {
            usage(v, k) / d
        } else {
            0.0
        }
    };
    let pct = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };

    let preds1: BTreeSet<usize> = edges
        .iter()
        .filter(|&&(_, t, _)| t == node)
        .map(|&(s, _, _)| s)
        .collect();
    let succs1: BTreeSet<usize> = edges
        .iter()
        .filter(|&&(s, _, _)| s == node)
        .map(|&(_, t, _)| t)
        .collect();
    let expand = |first: &BTreeSet<usize>| -> BTreeSet<usize> {
        let mut out = first.clone();
        for &m in first {
            for &(s, t, _) in &edges {
                if s == m && t != node {
                    out.insert(t);
                }
                if t == m && s != node {
                    out.insert(s);
                }
            }
        }
        out
    };
    let preds2 = expand(&preds1);
    let succs2 = expand(&succs1);

    let in_wires = |v: usize| -> Vec<f64> {
        edges
            .iter()
            .filter(|&&(_, t, _)| t == v)
            .map(|&(_, _, w)| w as f64)
            .collect()
    };
    let out_wires = |v: usize| -> Vec<f64> {
        edges
            .iter()
            .filter(|&&(s, _, _)| s == v)
            .map(|&(_, _, w)| w as f64)
            .collect()
    };
    let sum = |v: &[f64]| v.iter().sum::<f64>();
    let fmax = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);

    let sch = schema();
    let mut out = vec![0.0; sch.len()];
    let mut set = |name: &str, value: f64| {
        out[sch.position(name).unwrap()] = value;
    };

    set("bitwidth", f64::from(nodes[node].attrs.bitwidth));

    let fan_in = sum(&in_wires(node));
    let fan_out = sum(&out_wires(node));
    let mwi = fmax(&in_wires(node));
    let mwo = fmax(&out_wires(node));
    set("fan_in", fan_in);
    set("fan_out", fan_out);
    set("fan_sum", fan_in + fan_out);
    set("num_preds", preds1.len() as f64);
    set("num_succs", succs1.len() as f64);
    set("num_neighbors", (preds1.len() + succs1.len()) as f64);
    set("max_wire", mwi.max(mwo));
    set("fanin_max_wire_pct_in", pct(mwi, fan_in));
    set("fanout_max_wire_pct_out", pct(mwo, fan_out));

    let mut fan_in2 = fan_in;
    let mut mwi2 = mwi;
    for &p in &preds1 {
        fan_in2 += sum(&in_wires(p));
        mwi2 = mwi2.max(fmax(&in_wires(p)));
    }
    let mut fan_out2 = fan_out;
    let mut mwo2 = mwo;
    for &s in &succs1 {
        fan_out2 += sum(&out_wires(s));
        mwo2 = mwo2.max(fmax(&out_wires(s)));
    }
    set("twohop_fan_in", fan_in2);
    set("twohop_fan_out", fan_out2);
    set("twohop_fan_sum", fan_in2 + fan_out2);
    set("twohop_num_preds", preds2.len() as f64);
    set("twohop_num_succs", succs2.len() as f64);
    set("twohop_num_neighbors", (preds2.len() + succs2.len()) as f64);
    set("twohop_max_wire", mwi2.max(mwo2));
    set("twohop_fanin_max_wire_pct_in", pct(mwi2, fan_in2));
    set("twohop_fanout_max_wire_pct_out", pct(mwo2, fan_out2));

    for kind in ResourceKind::ALL {
        let t = kind.name();
        set(&format!("{t}_usage"), usage(node, kind));
        set(&format!("{t}_dev_ratio"), dev_ratio(node, kind));
        set(&format!("{t}_fn_ratio"), fn_ratio(node, kind));
        for (hop, preds, succs) in [("", &preds1, &succs1), ("twohop_", &preds2, &succs2)] {
            let agg = |s: &BTreeSet<usize>, f: &dyn Fn(usize) -> f64| {
                s.iter().map(|&u| f(u)).sum::<f64>()
            };
            let pu = agg(preds, &|u| usage(u, kind));
            let pd = agg(preds, &|u| dev_ratio(u, kind));
            let pf = agg(preds, &|u| fn_ratio(u, kind));
            let su = agg(succs, &|u| usage(u, kind));
            let sd = agg(succs, &|u| dev_ratio(u, kind));
            let sf = agg(succs, &|u| fn_ratio(u, kind));
            let mx = preds
                .union(succs)
                .map(|&u| usage(u, kind))
                .fold(0.0, f64::max);
            set(&format!("{t}_{hop}pred_usage_sum"), pu);
            set(&format!("{t}_{hop}pred_dev_ratio_sum"), pd);
            set(&format!("{t}_{hop}pred_fn_ratio_sum"), pf);
            set(&format!("{t}_{hop}succ_usage_sum"), su);
            set(&format!("{t}_{hop}succ_dev_ratio_sum"), sd);
            set(&format!("{t}_{hop}succ_fn_ratio_sum"), sf);
            set(&format!("{t}_{hop}nbr_usage_sum"), pu + su);
            set(&format!("{t}_{hop}nbr_dev_ratio_sum"), pd + sd);
            set(&format!("{t}_{hop}nbr_fn_ratio_sum"), pf + sf);
            set(&format!("{t}_{hop}nbr_max_usage"), mx);
            set(&format!("{t}_{hop}nbr_max_usage_pct"), pct(mx, pu + su));
        }
    }

    set("delay_ns", nodes[node].attrs.delay_ns);
    set("latency_cycles", f64::from(nodes[node].attrs.latency_cycles));

    let gap = |producer: usize, consumer: usize| -> f64 {
        (f64::from(nodes[consumer].attrs.start_state)
            - f64::from(nodes[producer].attrs.end_state))
        .max(0.0)
    };
    // Two-hop gap per node: distance-1 nodes keep the direct gap, distance-2
    // nodes minimize the larger per-edge gap over all two-step paths.
    let two_hop_gap = |first: &BTreeSet<usize>, pred_side: bool, u: usize| -> f64 {
        if first.contains(&u) {
            return if pred_side { gap(u, node) } else { gap(node, u) };
        }
        let mut best = f64::INFINITY;
        for &m in first {
            let g1 = if pred_side { gap(m, node) } else { gap(node, m) };
            for &(s, t, _) in &edges {
                if s == u && t == m {
                    best = best.min(g1.max(gap(u, m)));
                }
                if s == m && t == u {
                    best = best.min(g1.max(gap(m, u)));
                }
            }
        }
        best
    };

    for kind in ResourceKind::ALL {
        let t = kind.name();
        for (f, name) in [
            (&usage as &dyn Fn(usize, ResourceKind) -> f64, "usage"),
            (&dev_ratio, "dev_ratio"),
            (&fn_ratio, "fn_ratio"),
        ] {
            let mut p1_sum = 0.0;
            for &p in &preds1 {
                p1_sum += f(p, kind) / (gap(p, node) + 1.0);
            }
            let mut s1_sum = 0.0;
            for &s in &succs1 {
                s1_sum += f(s, kind) / (gap(node, s) + 1.0);
            }
            let mut p2_sum = 0.0;
            for &u in &preds2 {
                p2_sum += f(u, kind) / (two_hop_gap(&preds1, true, u) + 1.0);
            }
            let mut s2_sum = 0.0;
            for &u in &succs2 {
                s2_sum += f(u, kind) / (two_hop_gap(&succs1, false, u) + 1.0);
            }
            set(&format!("{t}_pred_{name}_per_dt"), p1_sum);
            set(&format!("{t}_succ_{name}_per_dt"), s1_sum);
            set(&format!("{t}_twohop_pred_{name}_per_dt"), p2_sum);
            set(&format!("{t}_twohop_succ_{name}_per_dt"), s2_sum);
        }
    }

    let own = nodes[node].attrs.op_type.unwrap();
    for t in OpType::ALL {
        set(&format!("is_{}", t.name()), if t == own { 1.0 } else { 0.0 });
    }
    for t in OpType::ALL {
        let count = preds1
            .union(&succs1)
            .filter(|&&u| nodes[u].attrs.op_type == Some(t))
            .count();
        set(&format!("nbr_count_{}", t.name()), count as f64);
    }

    let top = bundle.top_function();
    let own_fn = bundle
        .function(nodes[node].attrs.function_id.as_ref().unwrap())
        .unwrap();
    for kind in ResourceKind::ALL {
        set(
            &format!("ftop_usage_{}", kind.name()),
            top.resource_usage.get(kind) as f64,
        );
        set(
            &format!("fop_usage_{}", kind.name()),
            own_fn.resource_usage.get(kind) as f64,
        );
        set(
            &format!("fop_pct_ftop_{}", kind.name()),
            pct(
                own_fn.resource_usage.get(kind) as f64,
                top.resource_usage.get(kind) as f64,
            ),
        );
    }
    for (prefix, f) in [("ftop", top), ("fop", own_fn)] {
        set(&format!("{prefix}_target_clock_ns"), f.target_clock_ns);
        set(&format!("{prefix}_estimated_clock_ns"), f.estimated_clock_ns);
        set(
            &format!("{prefix}_clock_uncertainty_ns"),
            f.clock_uncertainty_ns,
        );
    }
    let mems = &bundle.globals.memories;
    set("mem_total_words", mems.iter().map(|m| m.words as f64).sum());
    set("mem_total_banks", mems.iter().map(|m| m.banks as f64).sum());
    set("mem_total_bits", mems.iter().map(|m| m.bits as f64).sum());
    set(
        "mem_total_primitives",
        mems.iter().map(|m| m.primitives as f64).sum(),
    );
    let mux = &bundle.globals.muxes;
    set("mux_count", mux.count as f64);
    set("mux_resource_total", mux.resource_usage.total() as f64);
    set("mux_max_input_size", mux.max_input_size as f64);
    set("mux_max_bitwidth", mux.max_bitwidth as f64);

    out
}

/// Relative-tolerance comparison that treats exact zeros strictly.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
