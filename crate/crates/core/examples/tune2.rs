//! Inspect ring demand profile, group label shapes and removal fraction.

use std::collections::HashMap;

use hls_congest::dataset::{filter_marginal, FilterMode};
use hls_congest::features::ExtractConfig;
use hls_congest::pipeline::assemble_designs;
use hls_congest::synthoracle::{generate_design, place_and_route, route_design, GenConfig};

fn main() {
    // Removal fraction over 3 suites of 10 designs.
    for suite in 0..3u64 {
        let mut designs = Vec::new();
        for d in 0..10u64 {
            let cfg = GenConfig {
                seed: suite * 1000 + d,
                ..GenConfig::default()
            };
            let bundle = generate_design(&cfg).unwrap();
            let labels = place_and_route(&bundle, &cfg.grid).unwrap();
            designs.push((bundle, labels, format!("d{d}")));
        }
        let (data, _) = assemble_designs(&designs, ExtractConfig::default()).unwrap();
        let (_, removed) =
            filter_marginal(&data, FilterMode::LabelDev { k: 1.5, group_min: 8 }).unwrap();
        let n = data.samples.len();
        let mut avg: Vec<f64> = data.samples.iter().map(|s| s.labels.avg).collect();
        avg.sort_by(f64::total_cmp);
        let q = |p: f64| avg[((n - 1) as f64 * p) as usize];
        println!(
            "suite {suite}: n {n} removed {:.2}% grouped {} | labels p10 {:.0} p25 {:.0} p50 {:.0} p75 {:.0} p95 {:.0}",
            100.0 * removed.len() as f64 / n as f64,
            removed.iter().all(|s| s.replica_group.is_some()),
            q(0.10),
            q(0.25),
            q(0.5),
            q(0.75),
            q(0.95),
        );
    }

    let cfg = GenConfig::default();
    let bundle = generate_design(&cfg).unwrap();
    let labels = place_and_route(&bundle, &cfg.grid).unwrap();
    let placement = route_design(&bundle, &cfg.grid).unwrap();
    let (w, h) = (cfg.grid.width, cfg.grid.height);
    let (cx, cy) = (w / 2, h / 2);
    let mut rings: HashMap<u32, (f64, u32)> = HashMap::new();
    for x in 0..w {
        for y in 0..h {
            let ring = x.abs_diff(cx).max(y.abs_diff(cy));
            let (v, hh) = placement.grid.congestion_pct(x, y);
            let e = rings.entry(ring).or_insert((0.0, 0));
            e.0 += (v + hh) / 2.0;
            e.1 += 1;
        }
    }
    let mut ring_ids: Vec<u32> = rings.keys().copied().collect();
    ring_ids.sort();
    print!("ring means: ");
    for r in ring_ids {
        let (s, c) = rings[&r];
        print!("{r}:{:.0} ", s / f64::from(c));
    }
    println!();

    let mut groups: HashMap<&str, Vec<f64>> = HashMap::new();
    for l in &labels {
        if let Some(g) = &l.replica_group {
            groups.entry(g).or_default().push(l.avg_cong_pct);
        }
    }
    let mut keys: Vec<&&str> = groups.keys().collect();
    keys.sort();
    for key in keys {
        let mut vals = groups[*key].clone();
        if vals.len() < 8 {
            continue;
        }
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let med = (vals[(n - 1) / 2] + vals[n / 2]) / 2.0;
        let half = n / 2;
        let q1 = (vals[(half - 1) / 2] + vals[half / 2]) / 2.0;
        let q3 = (vals[n - half + (half - 1) / 2] + vals[n - half + half / 2]) / 2.0;
        let thr = med - 1.5 * (q3 - q1);
        let below = vals.iter().filter(|&&v| v < thr).count();
        println!(
            "group {key}: n {n} min {:.0} q1 {q1:.0} med {med:.0} q3 {q3:.0} max {:.0} thr {thr:.0} below {below}",
            vals[0],
            vals[n - 1]
        );
    }
}
