//! Greedy CART regression tree with the squared-error criterion.
//!
//! Candidate thresholds are the midpoints of sorted distinct feature values;
//! the accepted split minimizes the summed squared error of the two children.
//! Ties break on the lowest feature index, then the smallest threshold.
//! Rows with a value equal to the threshold go left.

use super::ModelError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    children_sse: f64,
    left: Vec<usize>,
    right: Vec<usize>,
}

#[cfg(test)]
fn sse_of(y: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let sum: f64 = idx.iter().map(|&i| y[i]).sum();
    let sq: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
    sq - sum * sum / n
}

fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    features: &[usize],
) -> Option<BestSplit> {
    let mut best: Option<BestSplit> = None;
    for &f in features {
        let mut order: Vec<usize> = idx.to_vec();
        order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap());
        let n = order.len();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let total_sum: f64 = order.iter().map(|&i| y[i]).sum();
        let total_sq: f64 = order.iter().map(|&i| y[i] * y[i]).sum();
        for s in 1..n {
            let prev = order[s - 1];
            left_sum += y[prev];
            left_sq += y[prev] * y[prev];
            if x[order[s]][f] == x[prev][f] {
                continue; // not a boundary between distinct values
            }
            let right_sum = total_sum - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / s as f64)
                + (right_sq - right_sum * right_sum / (n - s) as f64);
            let better = match &best {
                None => true,
                Some(b) => sse < b.children_sse,
            };
            if better {
                best = Some(BestSplit {
                    feature: f,
                    threshold: (x[prev][f] + x[order[s]][f]) / 2.0,
                    children_sse: sse,
                    left: order[..s].to_vec(),
                    right: order[s..].to_vec(),
                });
            }
        }
    }
    best
}

/// Build a node over `idx`; `pick_features` chooses the candidate feature
/// set per split (identity for a plain tree, a random subset for forests).
pub(crate) fn build_node(
    x: &[Vec<f64>],
    y: &[f64],
    idx: &[usize],
    depth: usize,
    max_depth: usize,
    min_samples_split: usize,
    pick_features: &mut dyn FnMut(usize) -> Vec<usize>,
) -> Node {
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
    let pure = idx.iter().all(|&i| y[i] == y[idx[0]]);
    if pure || depth >= max_depth || idx.len() < min_samples_split {
        return Node::Leaf { value: mean };
    }
    let p = x[0].len();
    // Tie-breaking needs candidates in ascending feature order.
    let mut features = pick_features(p);
    features.sort_unstable();
    match best_split(x, y, idx, &features) {
        Some(b) => Node::Split {
            feature: b.feature,
            threshold: b.threshold,
            left: Box::new(build_node(
                x,
                y,
                &b.left,
                depth + 1,
                max_depth,
                min_samples_split,
                pick_features,
            )),
            right: Box::new(build_node(
                x,
                y,
                &b.right,
                depth + 1,
                max_depth,
                min_samples_split,
                pick_features,
            )),
        },
        None => Node::Leaf { value: mean },
    }
}

pub fn tree_fit(
    x: &[Vec<f64>],
    y: &[f64],
    max_depth: usize,
    min_samples_split: usize,
) -> Result<DecisionTree, ModelError> {
    if x.is_empty() || y.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x.len(),
            y.len()
        )));
    }
    let idx: Vec<usize> = (0..x.len()).collect();
    let mut all = |p: usize| (0..p).collect::<Vec<_>>();
    let root = build_node(x, y, &idx, 0, max_depth, min_samples_split, &mut all);
    Ok(DecisionTree {
        root,
        max_depth,
        min_samples_split,
    })
}

fn route(node: &Node, row: &[f64]) -> f64 {
    match node {
        Node::Leaf { value } => *value,
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if row[*feature] <= *threshold {
                route(left, row)
            } else {
                route(right, row)
            }
        }
    }
}

pub fn tree_predict(m: &DecisionTree, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    let needed = max_feature(&m.root);
    if let Some(f) = needed {
        if x.iter().any(|r| r.len() <= f) {
            return Err(ModelError::DimensionMismatch(format!(
                "tree splits on feature {f}"
            )));
        }
    }
    Ok(x.iter().map(|r| route(&m.root, r)).collect())
}

fn max_feature(node: &Node) -> Option<usize> {
    match node {
        Node::Leaf { .. } => None,
        Node::Split {
            feature,
            left,
            right,
            ..
        } => {
            let mut m = *feature;
            if let Some(f) = max_feature(left) {
                m = m.max(f);
            }
            if let Some(f) = max_feature(right) {
                m = m.max(f);
            }
            Some(m)
        }
    }
}

#[cfg(test)]
pub(crate) fn node_sse(y: &[f64], idx: &[usize]) -> f64 {
    sse_of(y, idx)
}
