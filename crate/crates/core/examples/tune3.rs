//! Compare both filter placements: training-only vs filter-before-split.

use hls_congest::dataset::{filter_marginal, matrix_and_target, split, FilterMode, Target};
use hls_congest::features::{schema, ExtractConfig};
use hls_congest::learners::cv::GbrtParams;
use hls_congest::learners::{mae, GridPoint, ModelKind};
use hls_congest::pipeline::{assemble_designs, train_target, TrainOptions};
use hls_congest::synthoracle::{generate_design, place_and_route, GenConfig};

fn main() {
    let mode = FilterMode::LabelDev { k: 1.5, group_min: 8 };
    for suite in 0..5u64 {
        let mut designs = Vec::new();
        for d in 0..10u64 {
            let cfg = GenConfig {
                seed: suite * 1000 + d,
                ..GenConfig::default()
            };
            let bundle = generate_design(&cfg).unwrap();
            let labels = place_and_route(&bundle, &cfg.grid).unwrap();
            designs.push((bundle, labels, format!("s{suite}d{d}")));
        }
        let (data, _) = assemble_designs(&designs, ExtractConfig::default()).unwrap();
        let opts = TrainOptions {
            seed: suite + 100,
            folds: 0,
            filter: None,
            fixed_point: Some(GridPoint::Gbrt(GbrtParams {
                n_estimators: 240,
                learning_rate: 0.05,
                max_depth: 6,
                min_samples_leaf: 5,
            })),
            ..TrainOptions::default()
        };
        let fp = schema().fingerprint();

        // Arm A: no filtering.
        let (train_a, test_a) = split(&data, 0.2, opts.seed);
        // Arm B: filter the whole dataset, then split.
        let (filtered, removed) = filter_marginal(&data, mode).unwrap();
        let (train_b, test_b) = split(&filtered, 0.2, opts.seed);

        print!("suite {suite} (removed {}): ", removed.len());
        let mut ok = true;
        let mut any = false;
        for target in [Target::Vert, Target::Horiz, Target::Avg] {
            let m_a = train_target(&train_a, target, ModelKind::Gbrt, &opts).unwrap().model;
            let m_b = train_target(&train_b, target, ModelKind::Gbrt, &opts).unwrap().model;
            let (xa, ya) = matrix_and_target(&test_a, target);
            let (xb, yb) = matrix_and_target(&test_b, target);
            let a = mae(&ya, &m_a.predict(&xa, fp).unwrap()).unwrap();
            let b = mae(&yb, &m_b.predict(&xb, fp).unwrap()).unwrap();
            // Error of removed samples under the unfiltered model.
            let rx: Vec<Vec<f64>> = removed.iter().map(|s| s.features.values.clone()).collect();
            let ry: Vec<f64> = removed.iter().map(|s| s.labels.get(target)).collect();
            let rmae = mae(&ry, &m_a.predict(&rx, fp).unwrap()).unwrap();
            print!("{} {:+.3} (rm {:.0}) ", target.name(), b - a, rmae);
            ok &= b <= a;
            any |= b < a;
        }
        println!("=> trend2 {}", ok && any);
    }
}
