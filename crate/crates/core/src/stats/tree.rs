use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::clustering::QualityLabel;
use crate::features::SelectedFeatures;

pub const DEFAULT_MAX_DEPTH: usize = 8;
/// Nodes with fewer rows than this become leaves.
pub const MIN_NODE_SIZE: usize = 5;
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf(QualityLabel),
    /// Rows with `features[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub max_depth: usize,
}

impl DecisionTree {
    pub fn predict(&self, f: &SelectedFeatures) -> QualityLabel {
        predict_tree(self, f)
    }
}

fn class_counts(rows: &[([f64; 7], QualityLabel)], idx: &[usize]) -> [usize; 5] {
    let mut c = [0usize; 5];
    for &i in idx {
        c[rows[i].1.index()] += 1;
    }
    c
}

fn gini(counts: &[usize; 5], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Most frequent label; ties go to the lowest label.
fn majority(counts: &[usize; 5]) -> QualityLabel {
    let mut best = 0;
    for i in 1..5 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    QualityLabel::ALL[best]
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Best Gini split scanning features and thresholds in ascending order; a later
/// candidate replaces the incumbent only on a strictly larger gain.
fn best_split(rows: &[([f64; 7], QualityLabel)], idx: &[usize], parent: f64) -> Option<Split> {
    let n = idx.len();
    let total = class_counts(rows, idx);
    let mut best: Option<Split> = None;
    for feature in 0..7 {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| rows[a].0[feature].total_cmp(&rows[b].0[feature]));
        let mut left = [0usize; 5];
        for pos in 1..n {
            left[rows[order[pos - 1]].1.index()] += 1;
            let (lo, hi) = (rows[order[pos - 1]].0[feature], rows[order[pos]].0[feature]);
            if lo == hi {
                continue;
            }
            let mut right = total;
            for c in 0..5 {
                right[c] -= left[c];
            }
            let (nl, nr) = (pos as f64, (n - pos) as f64);
            let child = (nl * gini(&left, pos) + nr * gini(&right, n - pos)) / n as f64;
            let gain = parent - child;
            if best.as_ref().is_none_or(|b| gain > b.gain + GAIN_EPS) {
                best = Some(Split {
                    feature,
                    threshold: lo + (hi - lo) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn grow(rows: &[([f64; 7], QualityLabel)], idx: Vec<usize>, depth: usize, max_depth: usize) -> TreeNode {
    let counts = class_counts(rows, &idx);
    let impurity = gini(&counts, idx.len());
    if impurity == 0.0 || depth >= max_depth || idx.len() < MIN_NODE_SIZE {
        return TreeNode::Leaf(majority(&counts));
    }
    let Some(split) = best_split(rows, &idx, impurity) else {
        return TreeNode::Leaf(majority(&counts));
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| rows[i].0[split.feature] < split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(rows, left, depth + 1, max_depth)),
        right: Box::new(grow(rows, right, depth + 1, max_depth)),
    }
}

/// CART with Gini impurity. Thresholds are midpoints between adjacent distinct values.
pub fn train_tree(
    rows: &[(SelectedFeatures, QualityLabel)],
    max_depth: usize,
) -> Result<DecisionTree, StatsError> {
    let arrays: Vec<([f64; 7], QualityLabel)> = rows.iter().map(|(f, l)| (f.to_array(), *l)).collect();
    let counts = class_counts(&arrays, &(0..arrays.len()).collect::<Vec<_>>());
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(StatsError::EmptyTraining);
    }
    Ok(DecisionTree {
        root: grow(&arrays, (0..arrays.len()).collect(), 0, max_depth),
        max_depth,
    })
}

pub fn predict_tree(tree: &DecisionTree, f: &SelectedFeatures) -> QualityLabel {
    let x = f.to_array();
    let mut node = &tree.root;
    loop {
        match node {
            TreeNode::Leaf(label) => return *label,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => node = if x[*feature] < *threshold { left } else { right },
        }
    }
}
