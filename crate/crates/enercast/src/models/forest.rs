//! Random forest regressor: bootstrap-resampled CART trees with per-split
//! feature subsampling, averaged exactly at prediction time.

use super::tree::{build_node, tree_predict, DecisionTree};
use super::ModelError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Draw n rows with replacement per tree; disabled, every tree sees all rows.
    pub bootstrap: bool,
    /// Consider ceil(p/3) random features per split; disabled, all features.
    pub feature_subsample: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            max_depth: 14,
            min_samples_split: 20,
            bootstrap: true,
            feature_subsample: true,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub config: ForestConfig,
}

// Independent per-tree seed stream so trees can be trained in any order.
fn tree_seed(base: u64, tree_index: usize) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tree_index as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn forest_fit(x: &[Vec<f64>], y: &[f64], cfg: &ForestConfig) -> Result<RandomForest, ModelError> {
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
    assert!(cfg.n_estimators >= 1, "need at least one tree");
    let n = x.len();
    let p = x[0].len();
    let subset_size = if cfg.feature_subsample {
        p.div_ceil(3)
    } else {
        p
    };

    let trees = (0..cfg.n_estimators)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(cfg.seed, t));
            let idx: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut pick = |p: usize| -> Vec<usize> {
                if subset_size >= p {
                    return (0..p).collect();
                }
                // Partial Fisher-Yates draw of `subset_size` distinct features.
                let mut pool: Vec<usize> = (0..p).collect();
                for i in 0..subset_size {
                    let j = rng.gen_range(i..p);
                    pool.swap(i, j);
                }
                pool.truncate(subset_size);
                pool
            };
            let root = build_node(x, y, &idx, 0, cfg.max_depth, cfg.min_samples_split, &mut pick);
            DecisionTree {
                root,
                max_depth: cfg.max_depth,
                min_samples_split: cfg.min_samples_split,
            }
        })
        .collect();

    Ok(RandomForest {
        trees,
        config: cfg.clone(),
    })
}

/// Arithmetic mean of the member trees' predictions.
pub fn forest_predict(m: &RandomForest, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
    let mut acc = vec![0.0; x.len()];
    for tree in &m.trees {
        for (a, p) in acc.iter_mut().zip(tree_predict(tree, x)?) {
            *a += p;
        }
    }
    let k = m.trees.len() as f64;
    Ok(acc.into_iter().map(|v| v / k).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::{tree_fit, Node};

    fn toy_data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64;
                vec![t.sin(), (0.3 * t).cos(), (i % 5) as f64]
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] + r[2] * 0.5).collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let (x, y) = toy_data(40);
        let cfg = ForestConfig {
            n_estimators: 1,
            max_depth: 4,
            min_samples_split: 2,
            bootstrap: false,
            feature_subsample: false,
            seed: 1,
        };
        let forest = forest_fit(&x, &y, &cfg).unwrap();
        let tree = tree_fit(&x, &y, 4, 2).unwrap();
        assert_eq!(forest.trees[0].root, tree.root);
        assert_eq!(
            forest_predict(&forest, &x).unwrap(),
            tree_predict(&tree, &x).unwrap()
        );
    }

    #[test]
    fn prediction_is_exact_mean_of_trees() {
        let (x, y) = toy_data(60);
        let forest = forest_fit(
            &x,
            &y,
            &ForestConfig {
                n_estimators: 7,
                max_depth: 5,
                min_samples_split: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let pred = forest_predict(&forest, &x).unwrap();
        for (i, row) in x.iter().enumerate() {
            let mean: f64 = forest
                .trees
                .iter()
                .map(|t| tree_predict(t, std::slice::from_ref(row)).unwrap()[0])
                .sum::<f64>()
                / forest.trees.len() as f64;
            assert_eq!(pred[i], mean);
        }
    }

    #[test]
    fn averaging_two_constant_trees() {
        let leaf = |v: f64| DecisionTree {
            root: Node::Leaf { value: v },
            max_depth: 1,
            min_samples_split: 2,
        };
        let forest = RandomForest {
            trees: vec![leaf(2.0), leaf(4.0)],
            config: ForestConfig::default(),
        };
        assert_eq!(forest_predict(&forest, &[vec![0.0]]).unwrap(), vec![3.0]);
    }

    #[test]
    fn same_seed_gives_identical_forests() {
        let (x, y) = toy_data(50);
        let cfg = ForestConfig {
            n_estimators: 5,
            max_depth: 6,
            min_samples_split: 2,
            ..Default::default()
        };
        let a = forest_fit(&x, &y, &cfg).unwrap();
        let b = forest_fit(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
