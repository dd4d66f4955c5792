//! Binary decision tree with axis-aligned splits, grown best-first on Gini
//! impurity decrease, capped at 100 splits.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, NormalizationStats};
use crate::error::{Error, Result};

pub const MAX_SPLITS: usize = 100;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        /// Training-sample count per class at this leaf.
        counts: Vec<usize>,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// x[feature] < threshold goes left.
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeModel {
    pub labels: Vec<String>,
    pub nodes: Vec<TreeNode>,
    pub split_count: usize,
    pub normalization: NormalizationStats,
}

fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct CandidateSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
    left_rows: Vec<usize>,
    right_rows: Vec<usize>,
}

/// Best split of `rows` by weighted Gini decrease. Thresholds are midpoints
/// between sorted distinct feature values; ties break toward the lowest
/// feature index, then the lowest threshold.
fn best_split(data: &Dataset, targets: &[usize], k: usize, rows: &[usize]) -> Option<CandidateSplit> {
    let mut parent_counts = vec![0usize; k];
    for &r in rows {
        parent_counts[targets[r]] += 1;
    }
    let parent_impurity = gini(&parent_counts) * rows.len() as f64;

    let mut best: Option<CandidateSplit> = None;
    for feature in 0..data.n_features() {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| {
            data.features[(a, feature)]
                .total_cmp(&data.features[(b, feature)])
                .then(a.cmp(&b))
        });
        let mut left_counts = vec![0usize; k];
        let mut right_counts = parent_counts.clone();
        for i in 0..sorted.len() - 1 {
            let r = sorted[i];
            left_counts[targets[r]] += 1;
            right_counts[targets[r]] -= 1;
            let v = data.features[(r, feature)];
            let v_next = data.features[(sorted[i + 1], feature)];
            if v == v_next {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (sorted.len() - i - 1) as f64;
            let decrease = parent_impurity - gini(&left_counts) * nl - gini(&right_counts) * nr;
            let threshold = 0.5 * (v + v_next);
            let better = match &best {
                None => decrease > 1e-12,
                Some(b) => {
                    decrease > b.decrease + 1e-12
                        || (decrease > b.decrease - 1e-12
                            && (feature, threshold) < (b.feature, b.threshold)
                            && decrease > 1e-12)
                }
            };
            if better {
                best = Some(CandidateSplit {
                    feature,
                    threshold,
                    decrease,
                    left_rows: Vec::new(),
                    right_rows: Vec::new(),
                });
            }
        }
    }
    if let Some(b) = &mut best {
        for &r in rows {
            if data.features[(r, b.feature)] < b.threshold {
                b.left_rows.push(r);
            } else {
                b.right_rows.push(r);
            }
        }
    }
    best
}

/// Grows the tree best-first: among all current leaves, repeatedly splits
/// the one with the largest impurity decrease, until 100 splits or no leaf
/// has a positive-decrease split.
pub fn fit_tree(train: &Dataset, normalization: NormalizationStats) -> Result<TreeModel> {
    if train.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    let (labels, targets) = train.class_indices();
    let k = labels.len();

    let counts_of = |rows: &[usize]| {
        let mut counts = vec![0usize; k];
        for &r in rows {
            counts[targets[r]] += 1;
        }
        counts
    };

    let mut nodes = vec![TreeNode::Leaf {
        counts: counts_of(&(0..train.n_rows()).collect::<Vec<_>>()),
    }];
    // open leaves: (node id, rows, cached best split)
    let mut open: Vec<(usize, Vec<usize>, Option<CandidateSplit>)> = Vec::new();
    let all_rows: Vec<usize> = (0..train.n_rows()).collect();
    let split0 = best_split(train, &targets, k, &all_rows);
    open.push((0, all_rows, split0));

    let mut split_count = 0;
    while split_count < MAX_SPLITS {
        // leaf with the largest decrease; ties toward the oldest node id
        let mut pick: Option<usize> = None;
        for (i, (_, _, cand)) in open.iter().enumerate() {
            if let Some(c) = cand {
                let better = match pick {
                    None => true,
                    Some(p) => {
                        let pc = open[p].2.as_ref().unwrap();
                        c.decrease > pc.decrease + 1e-12
                    }
                };
                if better {
                    pick = Some(i);
                }
            }
        }
        let Some(i) = pick else { break };
        let (node_id, _, cand) = open.swap_remove(i);
        let cand = cand.unwrap();

        let left_id = nodes.len();
        nodes.push(TreeNode::Leaf {
            counts: counts_of(&cand.left_rows),
        });
        let right_id = nodes.len();
        nodes.push(TreeNode::Leaf {
            counts: counts_of(&cand.right_rows),
        });
        nodes[node_id] = TreeNode::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: left_id,
            right: right_id,
        };
        split_count += 1;

        for (id, rows) in [(left_id, cand.left_rows), (right_id, cand.right_rows)] {
            let s = best_split(train, &targets, k, &rows);
            open.push((id, rows, s));
        }
    }

    Ok(TreeModel {
        labels,
        nodes,
        split_count,
        normalization,
    })
}

impl TreeModel {
    /// Class proportions of the reached leaf.
    pub fn posteriors(&self, z: &[f64]) -> Vec<f64> {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if z[*feature] < *threshold { *left } else { *right };
                }
                TreeNode::Leaf { counts } => {
                    let total: usize = counts.iter().sum();
                    return counts
                        .iter()
                        .map(|&c| c as f64 / total.max(1) as f64)
                        .collect();
                }
            }
        }
    }
}
