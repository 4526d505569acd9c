//! Regression tree with exact greedy split finding.
//!
//! Splits minimize the summed squared error of the two children, scanning
//! midpoints of sorted distinct feature values. Ties break towards the lower
//! feature index, then the lower threshold, so duplicating a feature column
//! never changes the fitted tree.
//!
//! Split search runs off per-feature presorted row orders. Large nodes
//! stream the presorted order through a membership mask; small nodes sort
//! their own rows. Both paths visit identical candidates in identical order,
//! so the fitted tree does not depend on the strategy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

/// Per-feature row orders sorted by (value, row index). Depends only on the
/// matrix, so a boosting loop builds it once and reuses it for every tree.
pub struct SortedColumns {
    idx: Vec<Vec<u32>>,
    val: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub fn build(x: &[Vec<f64>], indices: &[usize]) -> SortedColumns {
        let dims = if x.is_empty() { 0 } else { x[0].len() };
        let columns: Vec<(Vec<u32>, Vec<f64>)> = (0..dims)
            .into_par_iter()
            .map(|f| {
                let mut order: Vec<u32> = indices.iter().map(|&i| i as u32).collect();
                order.sort_by(|&a, &b| {
                    x[a as usize][f]
                        .total_cmp(&x[b as usize][f])
                        .then(a.cmp(&b))
                });
                let vals = order.iter().map(|&i| x[i as usize][f]).collect();
                (order, vals)
            })
            .collect();
        let mut idx = Vec::with_capacity(dims);
        let mut val = Vec::with_capacity(dims);
        for (i, v) in columns {
            idx.push(i);
            val.push(v);
        }
        SortedColumns { idx, val }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    cost: f64,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        match self.cost.total_cmp(&other.cost) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => match self.feature.cmp(&other.feature) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => self.threshold < other.threshold,
            },
        }
    }
}

fn sse_from_sums(sum: f64, sum_sq: f64, n: f64) -> f64 {
    (sum_sq - sum * sum / n).max(0.0)
}

/// Streams `(value, target)` pairs in (value, row) order and returns the
/// best legal split. Shared by both search strategies so they evaluate
/// byte-identical candidate sequences.
fn scan_candidates(
    pairs: impl Iterator<Item = (f64, f64)>,
    n: usize,
    total_sum: f64,
    total_sq: f64,
    feature: usize,
    min_samples_leaf: usize,
    parent_sse: f64,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    let mut left_n = 0usize;
    let mut prev: Option<f64> = None;
    for (value, target) in pairs {
        if let Some(pv) = prev {
            if value != pv && left_n >= min_samples_leaf && n - left_n >= min_samples_leaf {
                let cost = sse_from_sums(left_sum, left_sq, left_n as f64)
                    + sse_from_sums(
                        total_sum - left_sum,
                        total_sq - left_sq,
                        (n - left_n) as f64,
                    );
                if cost < parent_sse {
                    let cand = Candidate {
                        cost,
                        feature,
                        threshold: pv + (value - pv) / 2.0,
                    };
                    if best.map_or(true, |b| cand.better_than(&b)) {
                        best = Some(cand);
                    }
                }
            }
        }
        left_sum += target;
        left_sq += target * target;
        left_n += 1;
        prev = Some(value);
    }
    best
}

struct FitCtx<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    columns: &'a SortedColumns,
    max_depth: usize,
    min_samples_leaf: usize,
    /// Row count the presorted columns cover; the mask-streaming strategy
    /// costs O(total) per feature regardless of node size.
    total_rows: usize,
}

impl RegressionTree {
    /// Fits a tree to `(x, y)` restricted to `indices`, building the
    /// presorted columns internally.
    pub fn fit(
        x: &[Vec<f64>],
        y: &[f64],
        indices: &[usize],
        max_depth: usize,
        min_samples_leaf: usize,
    ) -> RegressionTree {
        let columns = SortedColumns::build(x, indices);
        Self::fit_with_columns(x, y, indices, max_depth, min_samples_leaf, &columns)
    }

    /// Fits a tree reusing presorted columns built over the same `indices`.
    pub fn fit_with_columns(
        x: &[Vec<f64>],
        y: &[f64],
        indices: &[usize],
        max_depth: usize,
        min_samples_leaf: usize,
        columns: &SortedColumns,
    ) -> RegressionTree {
        assert!(min_samples_leaf >= 1);
        assert!(!indices.is_empty());
        let ctx = FitCtx {
            x,
            y,
            columns,
            max_depth,
            min_samples_leaf,
            total_rows: indices.len(),
        };
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            max_depth,
            min_samples_leaf,
        };
        let mut mask = vec![false; x.len()];
        tree.grow(&ctx, indices, 0, &mut mask);
        tree
    }

    fn grow(&mut self, ctx: &FitCtx<'_>, indices: &[usize], depth: usize, mask: &mut [bool]) -> usize {
        let n = indices.len() as f64;
        let sum: f64 = indices.iter().map(|&i| ctx.y[i]).sum();
        let mean = sum / n;

        let make_leaf = |nodes: &mut Vec<TreeNode>| {
            nodes.push(TreeNode::Leaf { value: mean });
            nodes.len() - 1
        };

        if depth >= ctx.max_depth || indices.len() < 2 * ctx.min_samples_leaf {
            return make_leaf(&mut self.nodes);
        }
        let sum_sq: f64 = indices.iter().map(|&i| ctx.y[i] * ctx.y[i]).sum();
        let parent_sse = sse_from_sums(sum, sum_sq, n);
        if parent_sse == 0.0 {
            return make_leaf(&mut self.nodes);
        }

        let dims = ctx.x[indices[0]].len();
        let use_stream = indices.len() * 8 >= ctx.total_rows;
        if use_stream {
            for &i in indices {
                mask[i] = true;
            }
        }
        let candidates: Vec<Option<Candidate>> = (0..dims)
            .into_par_iter()
            .map(|f| {
                if use_stream {
                    scan_candidates(
                        ctx.columns.idx[f]
                            .iter()
                            .zip(&ctx.columns.val[f])
                            .filter(|&(&i, _)| mask[i as usize])
                            .map(|(&i, &v)| (v, ctx.y[i as usize])),
                        indices.len(),
                        sum,
                        sum_sq,
                        f,
                        ctx.min_samples_leaf,
                        parent_sse,
                    )
                } else {
                    best_split_sorting(
                        ctx.x,
                        ctx.y,
                        indices,
                        f,
                        sum,
                        sum_sq,
                        ctx.min_samples_leaf,
                        parent_sse,
                    )
                }
            })
            .collect();
        if use_stream {
            for &i in indices {
                mask[i] = false;
            }
        }

        let mut best: Option<Candidate> = None;
        for cand in candidates.into_iter().flatten() {
            if best.map_or(true, |b| cand.better_than(&b)) {
                best = Some(cand);
            }
        }
        let Some(split) = best else {
            return make_leaf(&mut self.nodes);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| ctx.x[i][split.feature] <= split.threshold);

        let node_id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { value: mean }); // placeholder
        let left = self.grow(ctx, &left_idx, depth + 1, mask);
        let right = self.grow(ctx, &right_idx, depth + 1, mask);
        self.nodes[node_id] = TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        node_id
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn internal_node_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Internal { .. }))
            .count()
    }

    /// Adds 1 to `counts[f]` for every internal node split on feature `f`.
    pub fn accumulate_split_counts(&self, counts: &mut [u64]) {
        for node in &self.nodes {
            if let TreeNode::Internal { feature, .. } = node {
                counts[*feature] += 1;
            }
        }
    }
}

/// Small-node strategy: sort the node's rows on the feature, then scan.
/// Node totals come from the caller so both strategies use identical sums.
#[allow(clippy::too_many_arguments)]
fn best_split_sorting(
    x: &[Vec<f64>],
    y: &[f64],
    indices: &[usize],
    feature: usize,
    total_sum: f64,
    total_sq: f64,
    min_samples_leaf: usize,
    parent_sse: f64,
) -> Option<Candidate> {
    let mut order: Vec<usize> = indices.to_vec();
    order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
    scan_candidates(
        order.iter().map(|&i| (x[i][feature], y[i])),
        order.len(),
        total_sum,
        total_sq,
        feature,
        min_samples_leaf,
        parent_sse,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_target_is_single_leaf() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0]];
        let y = vec![5.0; 3];
        let idx: Vec<usize> = (0..3).collect();
        let t = RegressionTree::fit(&x, &y, &idx, 4, 1);
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict_row(&[9.0]), 5.0);
    }

    #[test]
    fn splits_step_function_at_midpoint() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| if i < 5 { 0.0 } else { 1.0 }).collect();
        let idx: Vec<usize> = (0..10).collect();
        let t = RegressionTree::fit(&x, &y, &idx, 1, 1);
        match &t.nodes[0] {
            TreeNode::Internal { threshold, .. } => assert_eq!(*threshold, 4.5),
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(t.predict_row(&[0.0]), 0.0);
        assert_eq!(t.predict_row(&[9.0]), 1.0);
    }

    #[test]
    fn duplicated_column_breaks_tie_to_lower_index() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| (i as f64).powi(2)).collect();
        let idx: Vec<usize> = (0..8).collect();
        let single = RegressionTree::fit(
            &x.iter().map(|r| vec![r[0]]).collect::<Vec<_>>(),
            &y,
            &idx,
            3,
            1,
        );
        let dup = RegressionTree::fit(&x, &y, &idx, 3, 1);
        for node in &dup.nodes {
            if let TreeNode::Internal { feature, .. } = node {
                assert_eq!(*feature, 0);
            }
        }
        for i in 0..8 {
            assert_eq!(
                single.predict_row(&[i as f64]),
                dup.predict_row(&[i as f64, i as f64])
            );
        }
    }

    #[test]
    fn streaming_and_sorting_strategies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.random_range(8..80);
            let dims = rng.random_range(1..6);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..dims)
                        .map(|_| (rng.random_range(0..8) as f64) / 2.0)
                        .collect()
                })
                .collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let indices: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
            if indices.len() < 2 {
                continue;
            }
            let columns = SortedColumns::build(&x, &indices);
            let sum: f64 = indices.iter().map(|&i| y[i]).sum();
            let sum_sq: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();
            let parent = sse_from_sums(sum, sum_sq, indices.len() as f64);
            let mut mask = vec![false; n];
            for &i in &indices {
                mask[i] = true;
            }
            for f in 0..dims {
                let streamed = scan_candidates(
                    columns.idx[f]
                        .iter()
                        .zip(&columns.val[f])
                        .filter(|&(&i, _)| mask[i as usize])
                        .map(|(&i, &v)| (v, y[i as usize])),
                    indices.len(),
                    sum,
                    sum_sq,
                    f,
                    2,
                    parent,
                );
                let sorted = best_split_sorting(&x, &y, &indices, f, sum, sum_sq, 2, parent);
                match (streamed, sorted) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
                        assert_eq!(a.threshold.to_bits(), b.threshold.to_bits());
                        assert_eq!(a.feature, b.feature);
                    }
                    (a, b) => panic!("strategies disagree: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn min_samples_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let idx: Vec<usize> = (0..10).collect();
        let t = RegressionTree::fit(&x, &y, &idx, 10, 4);
        for i in 0..t.nodes.len() {
            if matches!(t.nodes[i], TreeNode::Leaf { .. }) {
                let hits = (0..10)
                    .filter(|&s| {
                        let mut at = 0;
                        loop {
                            match &t.nodes[at] {
                                TreeNode::Leaf { .. } => break at == i,
                                TreeNode::Internal {
                                    feature,
                                    threshold,
                                    left,
                                    right,
                                } => {
                                    at = if x[s][*feature] <= *threshold {
                                        *left
                                    } else {
                                        *right
                                    }
                                }
                            }
                        }
                    })
                    .count();
                assert!(hits >= 4, "leaf {i} has {hits} samples");
            }
        }
    }

    #[test]
    fn depth_zero_never_splits() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let idx: Vec<usize> = (0..10).collect();
        let t = RegressionTree::fit(&x, &y, &idx, 0, 1);
        assert_eq!(t.internal_node_count(), 0);
        assert_eq!(t.predict_row(&[3.0]), 4.5);
    }
}
