//! Weighted operation-dependency graph with resource-sharing merges.
//!
//! Operations bound to the same RTL instance collapse into one merged node;
//! their edges are redirected to the merged node, self-loops produced by the
//! merge are dropped, and parallel edges between one ordered node pair are
//! coalesced by summing wire counts. Each declared I/O port becomes an
//! auxiliary node with an edge of weight equal to the port bitwidth towards
//! every connected operation, so operations sharing a port see each other at
//! two hops.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::bundle::{DesignBundle, OpType, ResourceUsage};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Operation,
    Port,
    Merged,
}

/// Attributes of a graph node. For merged nodes, resources are summed over
/// members while bitwidth, delay, latency and states take the member maximum
/// (one shared module is sized for its widest use). Port nodes carry only
/// their bitwidth.
#[derive(Clone, Debug)]
pub struct NodeAttrs {
    pub op_type: Option<OpType>,
    pub bitwidth: u32,
    pub delay_ns: f64,
    pub latency_cycles: u32,
    pub start_state: u32,
    pub end_state: u32,
    pub resources: ResourceUsage,
    pub function_id: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub node_id: usize,
    pub kind: NodeKind,
    /// Operation ids represented by this node. Singleton for plain operation
    /// nodes, >= 2 for merged nodes, empty for ports.
    pub member_ops: Vec<String>,
    /// Port id when `kind == Port`.
    pub port_id: Option<String>,
    pub attrs: NodeAttrs,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(usize),
}

/// Directed weighted dependency graph. Immutable after construction.
#[derive(Clone, Debug)]
pub struct DepGraph {
    nodes: Vec<Node>,
    out_edges: Vec<Vec<(usize, u64)>>,
    in_edges: Vec<Vec<(usize, u64)>>,
    op_to_node: HashMap<String, usize>,
    port_to_node: HashMap<String, usize>,
}

/// One-hop view of a node: predecessor/successor sets plus the weighted
/// edge lists they came from.
#[derive(Clone, Debug)]
pub struct OneHop<'g> {
    pub preds: BTreeSet<usize>,
    pub succs: BTreeSet<usize>,
    pub in_edges: &'g [(usize, u64)],
    pub out_edges: &'g [(usize, u64)],
}

impl DepGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Result<&Node, GraphError> {
        self.nodes.get(id).ok_or(GraphError::UnknownNode(id))
    }

    /// Node that represents the given operation id.
    pub fn node_of_op(&self, op_id: &str) -> Option<usize> {
        self.op_to_node.get(op_id).copied()
    }

    pub fn node_of_port(&self, port_id: &str) -> Option<usize> {
        self.port_to_node.get(port_id).copied()
    }

    pub fn in_edges(&self, id: usize) -> &[(usize, u64)] {
        &self.in_edges[id]
    }

    pub fn out_edges(&self, id: usize) -> &[(usize, u64)] {
        &self.out_edges[id]
    }

    pub fn is_port(&self, id: usize) -> bool {
        self.nodes[id].kind == NodeKind::Port
    }

    /// Directed one-hop neighborhood. The sets never contain `n` itself;
    /// self-loops cannot exist after construction.
    pub fn one_hop(&self, n: usize) -> Result<OneHop<'_>, GraphError> {
        if n >= self.nodes.len() {
            return Err(GraphError::UnknownNode(n));
        }
        Ok(OneHop {
            preds: self.in_edges[n].iter().map(|&(s, _)| s).collect(),
            succs: self.out_edges[n].iter().map(|&(t, _)| t).collect(),
            in_edges: &self.in_edges[n],
            out_edges: &self.out_edges[n],
        })
    }

    /// Nodes at undirected distance <= 2 from `n`, excluding `n`.
    pub fn two_hop(&self, n: usize) -> Result<BTreeSet<usize>, GraphError> {
        if n >= self.nodes.len() {
            return Err(GraphError::UnknownNode(n));
        }
        let mut result = BTreeSet::new();
        let mut first = Vec::new();
        for &(u, _) in self.in_edges[n].iter().chain(self.out_edges[n].iter()) {
            if u != n && result.insert(u) {
                first.push(u);
            }
        }
        for &m in &first {
            for &(u, _) in self.in_edges[m].iter().chain(self.out_edges[m].iter()) {
                if u != n {
                    result.insert(u);
                }
            }
        }
        Ok(result)
    }

    /// Writes the graph in DOT format, one node or edge per line.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph depgraph {\n");
        for node in &self.nodes {
            let label = match node.kind {
                NodeKind::Port => format!("port {}", node.port_id.as_deref().unwrap_or("?")),
                NodeKind::Merged => format!("merged {}", node.member_ops.join("+")),
                NodeKind::Operation => node.member_ops[0].clone(),
            };
            out.push_str(&format!("  n{} [label=\"{}\"];\n", node.node_id, label));
        }
        for (src, targets) in self.out_edges.iter().enumerate() {
            for &(dst, w) in targets {
                out.push_str(&format!("  n{src} -> n{dst} [label=\"{w}\"];\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the merged, weighted dependency graph from a validated bundle.
/// Total over bundle validity: cannot fail.
pub fn build_graph(bundle: &DesignBundle) -> DepGraph {
    let op_index = bundle.op_index();

    // Sharing groups: >= 2 operations bound to one rtl_instance merge.
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, op) in bundle.operations.iter().enumerate() {
        if let Some(rtl) = &op.rtl_instance {
            groups.entry(rtl.as_str()).or_default().push(i);
        }
    }

    let mut nodes: Vec<Node> = Vec::new();
    let mut op_to_node: HashMap<String, usize> = HashMap::new();
    let mut assigned: Vec<Option<usize>> = vec![None; bundle.operations.len()];

    for (i, op) in bundle.operations.iter().enumerate() {
        if assigned[i].is_some() {
            continue;
        }
        let members: Vec<usize> = match &op.rtl_instance {
            Some(rtl) if groups[rtl.as_str()].len() >= 2 => groups[rtl.as_str()].clone(),
            _ => vec![i],
        };
        let node_id = nodes.len();
        let kind = if members.len() >= 2 {
            NodeKind::Merged
        } else {
            NodeKind::Operation
        };
        let mut resources = ResourceUsage::default();
        let mut bitwidth = 0;
        let mut delay_ns = 0.0f64;
        let mut latency = 0;
        let mut start_state = 0;
        let mut end_state = 0;
        for &m in &members {
            let mop = &bundle.operations[m];
            resources.add(&mop.resource_usage);
            bitwidth = bitwidth.max(mop.bitwidth);
            delay_ns = delay_ns.max(mop.delay_ns);
            latency = latency.max(mop.latency_cycles);
            start_state = start_state.max(mop.start_state);
            end_state = end_state.max(mop.end_state);
            assigned[m] = Some(node_id);
            op_to_node.insert(bundle.operations[m].op_id.clone(), node_id);
        }
        let first = &bundle.operations[members[0]];
        nodes.push(Node {
            node_id,
            kind,
            member_ops: members
                .iter()
                .map(|&m| bundle.operations[m].op_id.clone())
                .collect(),
            port_id: None,
            attrs: NodeAttrs {
                op_type: Some(first.op_type),
                bitwidth,
                delay_ns,
                latency_cycles: latency,
                start_state,
                end_state,
                resources,
                function_id: Some(first.function_id.clone()),
            },
        });
    }

    let mut port_to_node: HashMap<String, usize> = HashMap::new();
    for port in &bundle.ports {
        let node_id = nodes.len();
        port_to_node.insert(port.port_id.clone(), node_id);
        nodes.push(Node {
            node_id,
            kind: NodeKind::Port,
            member_ops: vec![],
            port_id: Some(port.port_id.clone()),
            attrs: NodeAttrs {
                op_type: None,
                bitwidth: port.bitwidth,
                delay_ns: 0.0,
                latency_cycles: 0,
                start_state: 0,
                end_state: 0,
                resources: ResourceUsage::default(),
                function_id: None,
            },
        });
    }

    // Redirect, drop self-loops, coalesce parallel edges by weight sum.
    let mut weights: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for edge in &bundle.edges {
        let s = assigned[op_index[edge.src.as_str()]].unwrap();
        let t = assigned[op_index[edge.dst.as_str()]].unwrap();
        if s == t {
            continue;
        }
        *weights.entry((s, t)).or_insert(0) += u64::from(edge.wire_count);
    }
    for port in &bundle.ports {
        let p = port_to_node[&port.port_id];
        for conn in &port.connected_ops {
            let t = assigned[op_index[conn.as_str()]].unwrap();
            *weights.entry((p, t)).or_insert(0) += u64::from(port.bitwidth);
        }
    }

    let mut out_edges: Vec<Vec<(usize, u64)>> = vec![Vec::new(); nodes.len()];
    let mut in_edges: Vec<Vec<(usize, u64)>> = vec![Vec::new(); nodes.len()];
    for (&(s, t), &w) in &weights {
        out_edges[s].push((t, w));
        in_edges[t].push((s, w));
    }
    for list in in_edges.iter_mut() {
        list.sort_unstable();
    }

    DepGraph {
        nodes,
        out_edges,
        in_edges,
        op_to_node,
        port_to_node,
    }
}
