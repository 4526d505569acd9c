//! Feature extraction checked against the naive brute-force recomputation,
//! plus schema-level invariants on random designs.

mod common;

use hls_congest::bundle::{DesignBundle, ResourceKind};
use hls_congest::depgraph::build_graph;
use hls_congest::features::{schema, Category, ExtractConfig, Extractor};

use common::{close, naive_features, random_bundle};

fn check_bundle(bundle: &DesignBundle, cfg: ExtractConfig, tag: &str) {
    let g = build_graph(bundle);
    let ex = Extractor::new(&g, bundle, cfg);
    for node in g.nodes() {
        if g.is_port(node.node_id) {
            continue;
        }
        let got = ex.extract_node(node.node_id).unwrap();
        let want = naive_features(&g, bundle, node.node_id, cfg);
        for (i, (a, b)) in got.iter().zip(&want).enumerate() {
            assert!(
                close(*a, *b, 1e-12),
                "{tag} node {} feature {} ({}): {a} vs {b}",
                node.node_id,
                i,
                schema().entries()[i].name
            );
        }
    }
}

#[test]
fn aggregates_match_brute_force_on_random_graphs() {
    for seed in 0..40 {
        let bundle = random_bundle(seed, 30, true);
        check_bundle(&bundle, ExtractConfig::default(), &format!("seed {seed}"));
    }
}

#[test]
fn aggregates_match_brute_force_with_ports_excluded() {
    for seed in 40..60 {
        let bundle = random_bundle(seed, 25, true);
        check_bundle(
            &bundle,
            ExtractConfig {
                exclude_ports: true,
            },
            &format!("seed {seed}"),
        );
    }
}

#[test]
fn ratio_bounds_and_neighbor_monotonicity() {
    let sch = schema();
    for seed in 60..90 {
        let bundle = random_bundle(seed, 30, true);
        let g = build_graph(&bundle);
        let ex = Extractor::new(&g, &bundle, ExtractConfig::default());
        for node in g.nodes() {
            if g.is_port(node.node_id) {
                continue;
            }
            let v = ex.extract_node(node.node_id).unwrap();
            let at = |name: &str| v[sch.position(name).unwrap()];
            for name in [
                "fanin_max_wire_pct_in",
                "fanout_max_wire_pct_out",
                "twohop_fanin_max_wire_pct_in",
                "twohop_fanout_max_wire_pct_out",
            ] {
                let x = at(name);
                assert!((0.0..=1.0).contains(&x), "{name} = {x}");
            }
            for kind in ResourceKind::ALL {
                let t = kind.name();
                let dev = at(&format!("{t}_dev_ratio"));
                assert!((0.0..=1.0).contains(&dev));
                let pct = at(&format!("{t}_nbr_max_usage_pct"));
                assert!((0.0..=1.0).contains(&pct), "{t} pct {pct}");
                // Two-hop neighbor sums dominate one-hop sums.
                for side in ["pred", "succ", "nbr"] {
                    let one = at(&format!("{t}_{side}_usage_sum"));
                    let two = at(&format!("{t}_twohop_{side}_usage_sum"));
                    assert!(two >= one && one >= 0.0, "{t} {side}: {one} vs {two}");
                }
            }
            assert!(at("twohop_fan_in") >= at("fan_in"));
            assert!(at("twohop_fan_out") >= at("fan_out"));
        }
    }
}

#[test]
fn relabeling_op_ids_leaves_values_unchanged() {
    for seed in [7u64, 19, 31] {
        let bundle = random_bundle(seed, 25, true);
        let mut renamed = bundle.clone();
        let rename = |id: &str| format!("zz_{id}_x");
        for op in renamed.operations.iter_mut() {
            op.op_id = rename(&op.op_id);
        }
        for e in renamed.edges.iter_mut() {
            e.src = rename(&e.src);
            e.dst = rename(&e.dst);
        }
        for p in renamed.ports.iter_mut() {
            for c in p.connected_ops.iter_mut() {
                *c = rename(c);
            }
        }
        renamed.canonicalize();
        renamed.validate("renamed").unwrap();

        let g1 = build_graph(&bundle);
        let g2 = build_graph(&renamed);
        let e1 = Extractor::new(&g1, &bundle, ExtractConfig::default());
        let e2 = Extractor::new(&g2, &renamed, ExtractConfig::default());
        let all1 = e1.extract_all();
        let all2 = e2.extract_all();
        for fv in &all1 {
            let twin = all2
                .iter()
                .find(|f| f.op_id == rename(&fv.op_id))
                .expect("renamed twin exists");
            for (a, b) in fv.values.iter().zip(&twin.values) {
                assert!(close(*a, *b, 1e-12), "seed {seed} op {}: {a} vs {b}", fv.op_id);
            }
        }
    }
}

#[test]
fn schema_count_is_documented_constant() {
    // Category sizes: 1 + 18 + 100 + 2 + 48 + 30 + 26.
    let sch = schema();
    assert_eq!(sch.len(), 225);
    let count = |c: Category| sch.entries().iter().filter(|e| e.category == c).count();
    assert_eq!(
        [
            count(Category::Bitwidth),
            count(Category::Interconnection),
            count(Category::Resource),
            count(Category::Timing),
            count(Category::ResOverDt),
            count(Category::OpType),
            count(Category::Global),
        ],
        [1, 18, 100, 2, 48, 30, 26]
    );
}
