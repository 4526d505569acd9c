//! Scratch driver for inspecting synthetic-data quality: label
//! distributions, filter behavior and model ordering across seeds.

use std::time::Instant;

use hls_congest::dataset::{filter_marginal, FilterMode};
use hls_congest::features::ExtractConfig;
use hls_congest::learners::ModelKind;
use hls_congest::pipeline::{assemble_designs, evaluate_matrix, render_eval_table, TrainOptions};
use hls_congest::synthoracle::{generate_design, place_and_route, GenConfig};

fn main() {
    let mut t1 = 0;
    let mut t2 = 0;
    for suite_seed in 0..5u64 {
        let mut designs = Vec::new();
        for d in 0..10u64 {
            let cfg = GenConfig {
                seed: suite_seed * 1000 + d,
                ..GenConfig::default()
            };
            let bundle = generate_design(&cfg).unwrap();
            let labels = place_and_route(&bundle, &cfg.grid).unwrap();
            designs.push((bundle, labels, format!("s{suite_seed}d{d}")));
        }
        let (data, _) = assemble_designs(&designs, ExtractConfig::default()).unwrap();
        let n = data.samples.len();
        let mut avg: Vec<f64> = data.samples.iter().map(|s| s.labels.avg).collect();
        avg.sort_by(f64::total_cmp);
        let q = |p: f64| avg[((n - 1) as f64 * p) as usize];
        println!(
            "suite {suite_seed}: {n} samples, avg label min {:.1} p25 {:.1} p50 {:.1} p75 {:.1} p95 {:.1} max {:.1}",
            q(0.0), q(0.25), q(0.5), q(0.75), q(0.95), q(1.0)
        );

        let (_, removed) =
            filter_marginal(&data, FilterMode::LabelDev { k: 1.5, group_min: 8 }).unwrap();
        let pct = 100.0 * removed.len() as f64 / n as f64;
        let grouped = removed.iter().filter(|s| s.replica_group.is_some()).count();
        println!(
            "  filter: removed {} = {:.2}% (grouped {grouped}/{})",
            removed.len(),
            pct,
            removed.len()
        );

        let opts = TrainOptions {
            seed: suite_seed + 100,
            folds: 0,
            filter: None,
            ..TrainOptions::default()
        };
        let t0 = Instant::now();
        let rows = evaluate_matrix(
            &data,
            &[ModelKind::Lasso, ModelKind::Gbrt],
            FilterMode::LabelDev { k: 1.5, group_min: 8 },
            &opts,
        )
        .unwrap();
        println!("{}", render_eval_table(&rows));
        println!("  eval took {:.1}s", t0.elapsed().as_secs_f64());

        let cell = |kind: ModelKind, filtered: bool| {
            rows.iter()
                .find(|r| r.kind == kind && r.filtered == filtered)
                .unwrap()
                .cells
                .clone()
        };
        let g_nf = cell(ModelKind::Gbrt, false);
        let l_nf = cell(ModelKind::Lasso, false);
        let g_f = cell(ModelKind::Gbrt, true);
        let trend1 = (0..3).all(|i| g_nf[i].mae <= l_nf[i].mae);
        let trend2 = (0..3).all(|i| g_f[i].mae <= g_nf[i].mae)
            && (0..3).any(|i| g_f[i].mae < g_nf[i].mae);
        println!("  trend1 (gbrt<=lasso): {trend1}, trend2 (filter helps gbrt): {trend2}");
        t1 += trend1 as u32;
        t2 += trend2 as u32;
    }
    println!("trend1 {t1}/5, trend2 {t2}/5");
}
