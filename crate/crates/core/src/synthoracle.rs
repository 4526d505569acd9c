//! Synthetic design generator and toy place-and-route label oracle.
//!
//! The generator emits structurally plausible design bundles: layered
//! acyclic dataflow per function, unroll replica fan-outs fed from shared
//! array reads, optional resource sharing, port declarations and global
//! statistics. The router places shared-hardware units in schedule order on
//! a center-out spiral and routes every edge as an L (horizontal leg, then
//! vertical leg), accumulating wire counts into per-tile demand. Labels are
//! the resulting per-tile utilization percentages.
//!
//! The point is not realism: it is a deterministic world where features
//! genuinely correlate with congestion, dense centers out-congest the
//! boundary ring, and unroll replica groups develop low-label members at
//! the margin.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{
    DesignBundle, Edge, FunctionStats, GlobalStats, LabelRecord, MemoryStats, MuxStats,
    Operation, OpType, PortDecl, ResourceUsage, SourceLoc, SCHEMA_VERSION,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: u32,
    pub height: u32,
    /// Horizontal routing capacity of every tile.
    pub cap_h: u64,
    /// Vertical routing capacity of every tile.
    pub cap_v: u64,
    /// Placement slots per tile.
    pub ops_per_tile: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            width: 6,
            height: 24,
            cap_h: 300,
            cap_v: 700,
            ops_per_tile: 4,
        }
    }
}

/// Per-tile demand accumulators over a routing grid.
#[derive(Clone, Debug)]
pub struct TileGrid {
    pub width: u32,
    pub height: u32,
    pub cap_h: u64,
    pub cap_v: u64,
    demand_h: Vec<u64>,
    demand_v: Vec<u64>,
}

impl TileGrid {
    pub fn new(spec: &GridSpec) -> TileGrid {
        let n = (spec.width * spec.height) as usize;
        TileGrid {
            width: spec.width,
            height: spec.height,
            cap_h: spec.cap_h,
            cap_v: spec.cap_v,
            demand_h: vec![0; n],
            demand_v: vec![0; n],
        }
    }

    fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn add_horiz(&mut self, x: u32, y: u32, wires: u64) {
        let i = self.idx(x, y);
        self.demand_h[i] += wires;
    }

    pub fn add_vert(&mut self, x: u32, y: u32, wires: u64) {
        let i = self.idx(x, y);
        self.demand_v[i] += wires;
    }

    pub fn demand(&self, x: u32, y: u32) -> (u64, u64) {
        let i = self.idx(x, y);
        (self.demand_v[i], self.demand_h[i])
    }

    /// (vertical%, horizontal%) congestion of one tile.
    pub fn congestion_pct(&self, x: u32, y: u32) -> (f64, f64) {
        let i = self.idx(x, y);
        (
            100.0 * self.demand_v[i] as f64 / self.cap_v as f64,
            100.0 * self.demand_h[i] as f64 / self.cap_h as f64,
        )
    }

    pub fn total_demand(&self) -> (u64, u64) {
        (
            self.demand_v.iter().sum(),
            self.demand_h.iter().sum(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub functions: u32,
    /// Inclusive range of base operations per function, replicas excluded.
    pub ops_per_function: (u32, u32),
    pub unroll_groups_per_function: u32,
    /// Inclusive range of replica counts per unrolled group.
    pub unroll_replicas: (u32, u32),
    pub sharing_prob: f64,
    /// Expected number of extra inputs per operation beyond the first.
    pub edge_density: f64,
    pub bitwidths: Vec<u32>,
    pub grid: GridSpec,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            functions: 3,
            ops_per_function: (34, 46),
            unroll_groups_per_function: 4,
            unroll_replicas: (20, 45),
            sharing_prob: 0.15,
            edge_density: 1.0,
            bitwidths: vec![8, 16, 32, 64],
            grid: GridSpec::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
    #[error("grid too small: {units} placement units exceed {slots} slots")]
    GridTooSmall { units: usize, slots: usize },
}

const OP_WEIGHTS: [(OpType, u32); 14] = [
    (OpType::Add, 18),
    (OpType::Sub, 6),
    (OpType::Mul, 14),
    (OpType::Div, 2),
    (OpType::Icmp, 9),
    (OpType::Select, 8),
    (OpType::Xor, 5),
    (OpType::And, 5),
    (OpType::Or, 5),
    (OpType::Shift, 6),
    (OpType::Load, 12),
    (OpType::Store, 6),
    (OpType::Phi, 3),
    (OpType::Call, 1),
];

fn pick_op_type(rng: &mut ChaCha8Rng) -> OpType {
    let total: u32 = OP_WEIGHTS.iter().map(|(_, w)| w).sum();
    let mut roll = rng.random_range(0..total);
    for (t, w) in OP_WEIGHTS {
        if roll < w {
            return t;
        }
        roll -= w;
    }
    OpType::Other
}

fn resources_for(t: OpType, bw: u32, rng: &mut ChaCha8Rng) -> ResourceUsage {
    let bw = u64::from(bw);
    let jitter = |base: u64, rng: &mut ChaCha8Rng| base + rng.random_range(0..=base.max(1) / 4);
    match t {
        OpType::Mul => ResourceUsage::new(1 + bw / 32, 0, jitter(bw / 2, rng), jitter(bw, rng)),
        OpType::Div => ResourceUsage::new(2 + bw / 16, 0, jitter(bw * 2, rng), jitter(bw * 2, rng)),
        OpType::Load | OpType::Store => {
            ResourceUsage::new(0, 1 + bw / 64, jitter(bw / 4 + 1, rng), jitter(bw / 2 + 1, rng))
        }
        OpType::Phi | OpType::Select => {
            ResourceUsage::new(0, 0, jitter(bw + bw / 2, rng), jitter(bw / 2 + 1, rng))
        }
        _ => ResourceUsage::new(0, 0, jitter(bw, rng), jitter(bw / 2 + 1, rng)),
    }
}

fn delay_for(t: OpType, bw: u32, rng: &mut ChaCha8Rng) -> f64 {
    let base = match t {
        OpType::Mul => 5.2,
        OpType::Div => 9.5,
        OpType::Load | OpType::Store => 2.6,
        OpType::Icmp | OpType::Select => 1.4,
        OpType::Call => 3.0,
        _ => 1.8,
    };
    let width_factor = 1.0 + f64::from(bw) / 128.0;
    base * width_factor * rng.random_range(0.85..1.15)
}

fn latency_for(t: OpType, rng: &mut ChaCha8Rng) -> u32 {
    match t {
        OpType::Div => 8,
        OpType::Mul => 2 + rng.random_range(0..=1),
        OpType::Load | OpType::Store => 1,
        OpType::Call => 3,
        _ => rng.random_range(0..=1),
    }
}

struct OpDraft {
    op: Operation,
    inputs: Vec<(usize, u32)>, // (producer index, wire count)
}

/// Longest-path schedule: an op starts one state after its latest producer
/// finishes. Producers always precede consumers in `drafts`.
fn schedule(inputs: &[(usize, u32)], latency: u32, drafts: &[OpDraft]) -> (u32, u32) {
    let start = inputs
        .iter()
        .map(|&(p, _)| drafts[p].op.end_state + 1)
        .max()
        .unwrap_or(0);
    (start, start + latency)
}

/// Generates one deterministic, validated design bundle. The same seed
/// always yields a byte-identical bundle on disk.
pub fn generate_design(cfg: &GenConfig) -> Result<DesignBundle, OracleError> {
    if cfg.functions == 0 {
        return Err(OracleError::InfeasibleConfig("functions = 0".into()));
    }
    if cfg.ops_per_function.0 == 0 || cfg.ops_per_function.0 > cfg.ops_per_function.1 {
        return Err(OracleError::InfeasibleConfig(format!(
            "ops_per_function range {:?}",
            cfg.ops_per_function
        )));
    }
    if cfg.unroll_groups_per_function > 0
        && (cfg.unroll_replicas.0 == 0 || cfg.unroll_replicas.0 > cfg.unroll_replicas.1)
    {
        return Err(OracleError::InfeasibleConfig(format!(
            "unroll_replicas range {:?}",
            cfg.unroll_replicas
        )));
    }
    if !(0.0..=1.0).contains(&cfg.sharing_prob) {
        return Err(OracleError::InfeasibleConfig(format!(
            "sharing_prob = {}",
            cfg.sharing_prob
        )));
    }
    if cfg.bitwidths.is_empty() || cfg.bitwidths.contains(&0) {
        return Err(OracleError::InfeasibleConfig("bad bitwidth choices".into()));
    }
    if cfg.grid.width == 0 || cfg.grid.height == 0 || cfg.grid.ops_per_tile == 0 {
        return Err(OracleError::InfeasibleConfig("degenerate grid".into()));
    }
    if cfg.grid.cap_h == 0 || cfg.grid.cap_v == 0 {
        return Err(OracleError::InfeasibleConfig("zero routing capacity".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut drafts: Vec<OpDraft> = Vec::new();
    let mut functions: Vec<FunctionStats> = Vec::new();
    let mut ports: Vec<PortDecl> = Vec::new();
    let mut memories: Vec<MemoryStats> = Vec::new();

    let extra_input_prob = (cfg.edge_density / 2.0).clamp(0.0, 1.0);
    // Replica budget keeps aggressively unrolled designs inside the grid
    // while filling most of it, the way a tuned design uses its device.
    let slots = (cfg.grid.width * cfg.grid.height * cfg.grid.ops_per_tile) as usize;
    let overhead = (cfg.functions * cfg.ops_per_function.1
        + cfg.functions * cfg.unroll_groups_per_function * 2) as usize;
    let spine_target = (slots / 4).clamp(40, 220);
    let mut replica_budget = (slots * 9 / 10)
        .saturating_sub(overhead + spine_target)
        .max(8);
    // Non-replica nodes across all functions; thin design-wide streaming
    // arcs connect these, bathing every tile in many small independent
    // crossings. Replicas stay out so copies of one source op keep
    // identical neighborhoods.
    let mut arc_nodes: Vec<usize> = Vec::new();

    for f in 0..cfg.functions {
        let fname = if f == 0 {
            "main".to_string()
        } else {
            format!("fn{f}")
        };
        let file = format!("{fname}.c");
        let first_idx = drafts.len();
        let base_count =
            rng.random_range(cfg.ops_per_function.0..=cfg.ops_per_function.1) as usize;
        let mut line = 10u32;

        for k in 0..base_count {
            if k > 0 && rng.random_bool(0.4) {
                line += rng.random_range(1..=3);
            }
            let t = pick_op_type(&mut rng);
            let bw = *choose(&cfg.bitwidths, &mut rng);
            let mut inputs = Vec::new();
            let avail = drafts.len() - first_idx;
            if avail > 0 {
                let mut n_in = 1;
                for _ in 0..2 {
                    if rng.random_bool(extra_input_prob) {
                        n_in += 1;
                    }
                }
                let window = avail.min(12);
                for _ in 0..n_in.min(avail) {
                    let back = rng.random_range(1..=window);
                    let src = drafts.len() - back;
                    if inputs.iter().any(|&(s, _)| s == src) {
                        continue;
                    }
                    let src_bw = drafts[src].op.bitwidth;
                    let wires = if rng.random_bool(0.7) {
                        src_bw
                    } else {
                        rng.random_range(1..=src_bw)
                    };
                    inputs.push((src, wires));
                }
            }
            // Streaming arcs: narrow control and data strands from recent
            // producers, the way dataflow channels and handshakes hop
            // between pipeline stages.
            for _ in 0..3 {
                if arc_nodes.is_empty() || rng.random_bool(0.2) {
                    continue;
                }
                let back = rng.random_range(0..arc_nodes.len().min(20));
                let src = arc_nodes[arc_nodes.len() - 1 - back];
                if !inputs.iter().any(|&(s, _)| s == src) {
                    let wires = rng.random_range(1..=drafts[src].op.bitwidth.min(8));
                    inputs.push((src, wires));
                }
            }
            let mut latency = latency_for(t, &mut rng);
            if rng.random_bool(0.18) {
                // Memory stalls and pipeline bubbles stretch the schedule,
                // so scalar work coexists with unrolled bodies at every
                // point of the floorplan.
                latency += rng.random_range(4..18);
            }
            let (start_state, end_state) = schedule(&inputs, latency, &drafts);
            let op = Operation {
                op_id: format!("{fname}_op{k}"),
                op_type: t,
                bitwidth: bw,
                delay_ns: delay_for(t, bw, &mut rng),
                latency_cycles: latency,
                start_state,
                end_state,
                resource_usage: resources_for(t, bw, &mut rng),
                rtl_instance: None,
                function_id: fname.clone(),
                source_loc: Some(SourceLoc {
                    file: file.clone(),
                    line,
                }),
            };
            arc_nodes.push(drafts.len());
            drafts.push(OpDraft { op, inputs });
        }

        // Unrolled loops. Two flavors: fan groups read one shared array and
        // feed one reduction; chain groups carry a dependence from copy to
        // copy. Each group hangs off a random point of the scalar schedule,
        // so groups interleave with base logic across the floorplan.
        for g in 0..cfg.unroll_groups_per_function {
            // Mostly chains (loop-carried accumulators); an occasional fan
            // whose copies all read one shared array. A few chains unroll
            // aggressively and run far past the rest of the design.
            let chain_style = g % 4 != 3;
            let drawn =
                rng.random_range(cfg.unroll_replicas.0..=cfg.unroll_replicas.1) as usize;
            let replicas = if chain_style {
                drawn.min(replica_budget).max(1)
            } else {
                drawn.min(12)
            };
            replica_budget = replica_budget.saturating_sub(replicas);
            let bw = *choose(&cfg.bitwidths, &mut rng);
            let t = *choose(&[OpType::Mul, OpType::Add, OpType::Icmp], &mut rng);
            line += rng.random_range(2..=5);
            let reader_line = line;
            line += 1;
            let body_line = line;
            line += 1;

            let mut reader_inputs = if drafts.len() > first_idx {
                let p = rng.random_range(first_idx..drafts.len());
                vec![(p, drafts[p].op.bitwidth)]
            } else {
                vec![]
            };
            for _ in 0..2 {
                if arc_nodes.is_empty() {
                    continue;
                }
                let back = rng.random_range(0..arc_nodes.len().min(20));
                let src = arc_nodes[arc_nodes.len() - 1 - back];
                if !reader_inputs.iter().any(|&(s, _)| s == src) {
                    let wires = rng.random_range(1..=drafts[src].op.bitwidth.min(8));
                    reader_inputs.push((src, wires));
                }
            }
            let reader_idx = drafts.len();
            let (start_state, end_state) = schedule(&reader_inputs, 1, &drafts);
            let reader = Operation {
                op_id: format!("{fname}_u{g}_read"),
                op_type: OpType::Load,
                bitwidth: bw,
                delay_ns: delay_for(OpType::Load, bw, &mut rng),
                latency_cycles: 1,
                start_state,
                end_state,
                resource_usage: resources_for(OpType::Load, bw, &mut rng),
                rtl_instance: None,
                function_id: fname.clone(),
                source_loc: Some(SourceLoc {
                    file: file.clone(),
                    line: reader_line,
                }),
            };
            arc_nodes.push(reader_idx);
            drafts.push(OpDraft {
                op: reader,
                inputs: reader_inputs,
            });
            memories.push(MemoryStats {
                words: replicas as u64,
                banks: 2,
                bits: u64::from(bw),
                primitives: replicas as u64 * u64::from(bw) * 2,
            });

            let delay = delay_for(t, bw, &mut rng);
            let latency = latency_for(t, &mut rng);
            let resources = resources_for(t, bw, &mut rng);
            let mut replica_indices: Vec<usize> = Vec::with_capacity(replicas);
            for r in 0..replicas {
                let inputs = if chain_style && r > 0 {
                    vec![(replica_indices[r - 1], bw)]
                } else {
                    vec![(reader_idx, bw)]
                };
                let (start_state, end_state) = schedule(&inputs, latency, &drafts);
                let op = Operation {
                    op_id: format!("{fname}_u{g}_r{r}"),
                    op_type: t,
                    bitwidth: bw,
                    delay_ns: delay,
                    latency_cycles: latency,
                    start_state,
                    end_state,
                    resource_usage: resources,
                    rtl_instance: None,
                    function_id: fname.clone(),
                    source_loc: Some(SourceLoc {
                        file: file.clone(),
                        line: body_line,
                    }),
                };
                replica_indices.push(drafts.len());
                drafts.push(OpDraft { op, inputs });
            }

            let mut sum_inputs: Vec<(usize, u32)> = if chain_style {
                vec![(*replica_indices.last().unwrap(), bw)]
            } else {
                replica_indices.iter().map(|&i| (i, bw)).collect()
            };
            for _ in 0..2 {
                let back = rng.random_range(0..arc_nodes.len().min(20));
                let src = arc_nodes[arc_nodes.len() - 1 - back];
                if !sum_inputs.iter().any(|&(s, _)| s == src) {
                    let wires = rng.random_range(1..=drafts[src].op.bitwidth.min(8));
                    sum_inputs.push((src, wires));
                }
            }
            let (start_state, end_state) = schedule(&sum_inputs, 1, &drafts);
            let reduce = Operation {
                op_id: format!("{fname}_u{g}_sum"),
                op_type: OpType::Add,
                bitwidth: bw,
                delay_ns: delay_for(OpType::Add, bw, &mut rng),
                latency_cycles: 1,
                start_state,
                end_state,
                resource_usage: resources_for(OpType::Add, bw, &mut rng),
                rtl_instance: None,
                function_id: fname.clone(),
                source_loc: Some(SourceLoc {
                    file: file.clone(),
                    line: body_line + 1,
                }),
            };
            line += 1;
            arc_nodes.push(drafts.len());
            drafts.push(OpDraft {
                op: reduce,
                inputs: sum_inputs,
            });
        }

        // Resource sharing among same-shape base operations.
        if cfg.sharing_prob > 0.0 {
            let mut by_shape: HashMap<(OpType, u32), Vec<usize>> = HashMap::new();
            for i in first_idx..drafts.len() {
                let op = &drafts[i].op;
                if op.op_id.contains("_u") {
                    continue; // unroll structures stay parallel hardware
                }
                by_shape.entry((op.op_type, op.bitwidth)).or_default().push(i);
            }
            let mut shapes: Vec<(OpType, u32)> = by_shape.keys().copied().collect();
            shapes.sort();
            let mut gid = 0;
            for shape in shapes {
                let members = &by_shape[&shape];
                let mut at = 0;
                while at + 1 < members.len() {
                    if rng.random_bool(cfg.sharing_prob) {
                        let size = 2 + usize::from(
                            at + 2 < members.len() && rng.random_bool(0.3),
                        );
                        let rtl = format!("{fname}_{}_s{gid}", shape.0.name());
                        for &m in &members[at..at + size] {
                            drafts[m].op.rtl_instance = Some(rtl.clone());
                        }
                        gid += 1;
                        at += size;
                    } else {
                        at += 1;
                    }
                }
            }
        }

        // Ports: an input port feeding sources, an output port fed by sinks.
        let sources: Vec<String> = (first_idx..drafts.len())
            .filter(|&i| drafts[i].inputs.is_empty())
            .take(3)
            .map(|i| drafts[i].op.op_id.clone())
            .collect();
        if !sources.is_empty() {
            ports.push(PortDecl {
                port_id: format!("{fname}_in"),
                connected_ops: sources,
                bitwidth: 32,
            });
        }
        let consumed: std::collections::HashSet<usize> = drafts
            .iter()
            .flat_map(|d| d.inputs.iter().map(|&(p, _)| p))
            .collect();
        let sinks: Vec<String> = (first_idx..drafts.len())
            .rev()
            .filter(|i| !consumed.contains(i))
            .take(3)
            .map(|i| drafts[i].op.op_id.clone())
            .collect();
        if !sinks.is_empty() {
            ports.push(PortDecl {
                port_id: format!("{fname}_out"),
                connected_ops: sinks,
                bitwidth: 32,
            });
        }

        let mut usage = ResourceUsage::default();
        for d in &drafts[first_idx..] {
            usage.add(&d.op.resource_usage);
        }
        let target = 10.0;
        functions.push(FunctionStats {
            function_id: fname,
            resource_usage: usage,
            target_clock_ns: target,
            estimated_clock_ns: target * rng.random_range(0.8..1.35),
            clock_uncertainty_ns: 1.25,
            is_top: f == 0,
        });
    }

    // Control spine: the FSM token chain. One-bit phi hops with no fabric
    // cost, threading through the whole schedule and therefore through
    // every region of the final placement. Its hop length adapts so the
    // spine stays near its target share of the design.
    {
        let height = drafts
            .iter()
            .map(|d| d.op.end_state)
            .max()
            .unwrap_or(0)
            .max(1);
        let hop = (height as usize / spine_target).max(1) as u32;
        let members = (height / hop).max(8);
        let mut prev: Option<usize> = None;
        for s in 0..members {
            let inputs = match prev {
                Some(p) => vec![(p, 1u32)],
                None => vec![],
            };
            let (start_state, end_state) = schedule(&inputs, hop, &drafts);
            let op = Operation {
                op_id: format!("main_fsm_t{s}"),
                op_type: OpType::Phi,
                bitwidth: 1,
                delay_ns: 0.3,
                latency_cycles: hop,
                start_state,
                end_state,
                resource_usage: ResourceUsage::default(),
                rtl_instance: None,
                function_id: "main".into(),
                source_loc: Some(SourceLoc {
                    file: "main.c".into(),
                    line: 5,
                }),
            };
            prev = Some(drafts.len());
            drafts.push(OpDraft { op, inputs });
        }
    }

    // Writeback epilogue: one wide unrolled scan drains results through
    // narrow status strands after everything else has finished. It fills
    // the design out towards full device utilization, so its last copies
    // land at the quiet margin of the placed area.
    let fill_target = slots * 93 / 100;
    let epilogue = fill_target
        .saturating_sub(drafts.len())
        .min(drafts.len() / 3)
        .max(12);
    {
        let bw = 32u32;
        let anchor = (0..drafts.len())
            .max_by_key(|&i| (drafts[i].op.end_state, std::cmp::Reverse(i)))
            .expect("designs have at least one op");
        let reader_idx = drafts.len();
        let reader_inputs = vec![(anchor, drafts[anchor].op.bitwidth.min(8))];
        let (start_state, end_state) = schedule(&reader_inputs, 1, &drafts);
        drafts.push(OpDraft {
            op: Operation {
                op_id: "main_wb_read".into(),
                op_type: OpType::Load,
                bitwidth: bw,
                delay_ns: delay_for(OpType::Load, bw, &mut rng),
                latency_cycles: 1,
                start_state,
                end_state,
                resource_usage: resources_for(OpType::Load, bw, &mut rng),
                rtl_instance: None,
                function_id: "main".into(),
                source_loc: Some(SourceLoc {
                    file: "main.c".into(),
                    line: 200,
                }),
            },
            inputs: reader_inputs,
        });
        memories.push(MemoryStats {
            words: epilogue as u64,
            banks: 1,
            bits: u64::from(bw),
            primitives: epilogue as u64 * u64::from(bw),
        });
        let delay = delay_for(OpType::Store, bw, &mut rng);
        let resources = resources_for(OpType::Store, bw, &mut rng);
        let mut members = Vec::with_capacity(epilogue);
        for r in 0..epilogue {
            let inputs = vec![(reader_idx, rng.random_range(1..=2))];
            let (start_state, end_state) = schedule(&inputs, 1, &drafts);
            let op = Operation {
                op_id: format!("main_wb_s{r}"),
                op_type: OpType::Store,
                bitwidth: bw,
                delay_ns: delay,
                latency_cycles: 1,
                start_state,
                end_state,
                resource_usage: resources,
                rtl_instance: None,
                function_id: "main".into(),
                source_loc: Some(SourceLoc {
                    file: "main.c".into(),
                    line: 201,
                }),
            };
            members.push(drafts.len());
            drafts.push(OpDraft { op, inputs });
        }
        let flush_inputs: Vec<(usize, u32)> = members.iter().map(|&i| (i, 1)).collect();
        let (start_state, end_state) = schedule(&flush_inputs, 1, &drafts);
        drafts.push(OpDraft {
            op: Operation {
                op_id: "main_wb_flush".into(),
                op_type: OpType::Or,
                bitwidth: 1,
                delay_ns: 1.0,
                latency_cycles: 1,
                start_state,
                end_state,
                resource_usage: ResourceUsage::new(0, 0, epilogue as u64 / 4 + 1, 2),
                rtl_instance: None,
                function_id: "main".into(),
                source_loc: Some(SourceLoc {
                    file: "main.c".into(),
                    line: 202,
                }),
            },
            inputs: flush_inputs,
        });
        let mut extra = ResourceUsage::default();
        for &m in &members {
            extra.add(&drafts[m].op.resource_usage);
        }
        let main_stats = functions
            .iter_mut()
            .find(|f| f.is_top)
            .expect("top function exists");
        main_stats.resource_usage.add(&extra);
    }

    let edges: Vec<Edge> = drafts
        .iter()
        .flat_map(|d| {
            d.inputs.iter().map(|&(p, wires)| Edge {
                src: drafts[p].op.op_id.clone(),
                dst: d.op.op_id.clone(),
                wire_count: wires,
            })
        })
        .collect();

    let mux_ops: Vec<&OpDraft> = drafts.iter().filter(|d| d.inputs.len() >= 2).collect();
    let muxes = MuxStats {
        count: mux_ops.len() as u64,
        resource_usage: ResourceUsage::new(
            0,
            0,
            mux_ops
                .iter()
                .map(|d| d.inputs.len() as u64 * u64::from(d.op.bitwidth) / 4)
                .sum(),
            mux_ops.len() as u64 * 2,
        ),
        max_input_size: mux_ops.iter().map(|d| d.inputs.len() as u64).max().unwrap_or(0),
        max_bitwidth: mux_ops
            .iter()
            .map(|d| u64::from(d.op.bitwidth))
            .max()
            .unwrap_or(0),
    };

    let mut bundle = DesignBundle {
        schema_version: SCHEMA_VERSION.to_string(),
        operations: drafts.into_iter().map(|d| d.op).collect(),
        edges,
        ports,
        functions,
        globals: GlobalStats {
            memories,
            muxes,
            device_resources: ResourceUsage::new(900, 1000, 300_000, 600_000),
        },
    };
    bundle.canonicalize();
    debug_assert!(bundle.validate("generated").is_ok());
    Ok(bundle)
}

fn choose<'a, T>(items: &'a [T], rng: &mut ChaCha8Rng) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// Grid cells in center-out spiral order.
fn spiral_cells(width: u32, height: u32) -> Vec<(u32, u32)> {
    let (w, h) = (i64::from(width), i64::from(height));
    let total = (w * h) as usize;
    let mut cells = Vec::with_capacity(total);
    let (mut x, mut y) = (w / 2, h / 2);
    let keep = |x: i64, y: i64| x >= 0 && x < w && y >= 0 && y < h;
    if keep(x, y) {
        cells.push((x as u32, y as u32));
    }
    let dirs = [(1i64, 0i64), (0, 1), (-1, 0), (0, -1)];
    let mut leg = 1i64;
    let mut dir = 0usize;
    while cells.len() < total {
        for _ in 0..2 {
            let (dx, dy) = dirs[dir];
            for _ in 0..leg {
                x += dx;
                y += dy;
                if keep(x, y) {
                    cells.push((x as u32, y as u32));
                }
            }
            dir = (dir + 1) % 4;
        }
        leg += 1;
        if leg > 2 * (w + h) {
            break;
        }
    }
    debug_assert_eq!(cells.len(), total);
    cells
}

/// Placement result: per-operation tile coordinates in bundle order.
pub struct Placement {
    pub tiles: Vec<(u32, u32)>,
    pub grid: TileGrid,
}

/// Greedy center-out placement plus L-shaped demand routing.
///
/// Operations sharing an RTL instance are one physical unit and land on one
/// tile. Units are placed in schedule order (earliest start state first,
/// bundle order breaking ties) walking the spiral; each tile holds up to
/// `ops_per_tile` units. Every edge adds its wire count to the horizontal
/// demand of each tile its horizontal leg covers and to the vertical demand
/// of each tile its vertical leg covers; a leg that spans a single tile
/// contributes nothing.
pub fn route_design(bundle: &DesignBundle, spec: &GridSpec) -> Result<Placement, OracleError> {
    // Placement units: sharing groups collapse, everything else stands alone.
    let mut unit_of_op: Vec<usize> = Vec::with_capacity(bundle.operations.len());
    let mut unit_key: Vec<(u32, usize)> = Vec::new(); // (earliest start, first index)
    let mut group_unit: HashMap<&str, usize> = HashMap::new();
    for (i, op) in bundle.operations.iter().enumerate() {
        let unit = match &op.rtl_instance {
            Some(rtl) => match group_unit.get(rtl.as_str()) {
                Some(&u) => {
                    unit_key[u].0 = unit_key[u].0.min(op.start_state);
                    u
                }
                None => {
                    let u = unit_key.len();
                    group_unit.insert(rtl, u);
                    unit_key.push((op.start_state, i));
                    u
                }
            },
            None => {
                let u = unit_key.len();
                unit_key.push((op.start_state, i));
                u
            }
        };
        unit_of_op.push(unit);
    }

    let slots = (spec.width * spec.height * spec.ops_per_tile) as usize;
    if unit_key.len() > slots {
        return Err(OracleError::GridTooSmall {
            units: unit_key.len(),
            slots,
        });
    }

    let mut order: Vec<usize> = (0..unit_key.len()).collect();
    order.sort_by_key(|&u| unit_key[u]);
    let cells = spiral_cells(spec.width, spec.height);
    let mut unit_tile: Vec<(u32, u32)> = vec![(0, 0); unit_key.len()];
    for (rank, &u) in order.iter().enumerate() {
        unit_tile[u] = cells[rank / spec.ops_per_tile as usize];
    }
    let tiles: Vec<(u32, u32)> = unit_of_op.iter().map(|&u| unit_tile[u]).collect();

    let op_index = bundle.op_index();
    let mut grid = TileGrid::new(spec);
    for edge in &bundle.edges {
        let (x1, y1) = tiles[op_index[edge.src.as_str()]];
        let (x2, y2) = tiles[op_index[edge.dst.as_str()]];
        let w = u64::from(edge.wire_count);
        if x1 != x2 {
            for x in x1.min(x2)..=x1.max(x2) {
                grid.add_horiz(x, y1, w);
            }
        }
        if y1 != y2 {
            for y in y1.min(y2)..=y1.max(y2) {
                grid.add_vert(x2, y, w);
            }
        }
    }

    Ok(Placement { tiles, grid })
}

/// Replica-group id derived from unroll provenance: operations sharing a
/// source location and type are copies of one source operation. Singleton
/// groups carry no id.
fn replica_groups(bundle: &DesignBundle) -> Vec<Option<String>> {
    let mut counts: HashMap<(String, u32, OpType), u32> = HashMap::new();
    for op in &bundle.operations {
        if let Some(loc) = &op.source_loc {
            *counts
                .entry((loc.file.clone(), loc.line, op.op_type))
                .or_insert(0) += 1;
        }
    }
    bundle
        .operations
        .iter()
        .map(|op| {
            let loc = op.source_loc.as_ref()?;
            let key = (loc.file.clone(), loc.line, op.op_type);
            if counts[&key] >= 2 {
                Some(format!("{}:{}:{}", loc.file, loc.line, op.op_type.name()))
            } else {
                None
            }
        })
        .collect()
}

/// Places and routes the bundle, then reads one label per operation off the
/// final demand grid. Fully deterministic in `(bundle, spec)`.
pub fn place_and_route(
    bundle: &DesignBundle,
    spec: &GridSpec,
) -> Result<Vec<LabelRecord>, OracleError> {
    let placement = route_design(bundle, spec)?;
    let groups = replica_groups(bundle);
    Ok(bundle
        .operations
        .iter()
        .enumerate()
        .map(|(i, op)| {
            let (x, y) = placement.tiles[i];
            let (vert, horiz) = placement.grid.congestion_pct(x, y);
            LabelRecord {
                op_id: op.op_id.clone(),
                vert_cong_pct: vert,
                horiz_cong_pct: horiz,
                avg_cong_pct: (vert + horiz) / 2.0,
                clb_x: Some(x),
                clb_y: Some(y),
                replica_group: groups[i].clone(),
            }
        })
        .collect())
}
