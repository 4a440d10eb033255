//! End-to-end glue: fused table in, trained artifact out, and
//! range-restricted prediction against held-out rows.
//!
//! Scaling is always fitted on the training rows only; the same parameters
//! travel with the artifact and are applied to whatever range is evaluated.
//! Lag and window features are built over the whole table so evaluation rows
//! keep their real history, then filtered by target row index.

use crate::align::AlignedDataset;
use crate::features::{
    chronological_split, fit_scaler, lag_features, transform, windowize, FeatureError,
    SplitIndices,
};
use crate::models::{
    forest_fit, forest_predict, lstm_predict, ridge_predict, train_lstm, tree_fit, tree_predict,
    ModelError,
};
use crate::models::artifact::{FeatureConfig, ModelArtifact, TrainedModel};
use crate::models::{ridge_fit, ForestConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

pub const DEFAULT_LAG_COUNT: usize = 3;
pub const DEFAULT_WINDOW: usize = 6;
pub const DEFAULT_SPLIT: (f64, f64) = (0.70, 0.15);

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no usable rows in the requested range")]
    EmptyRange,
}

/// Which regressor to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Ridge { alpha: f64 },
    Tree { max_depth: usize, min_samples_split: usize },
    Forest {
        n_estimators: usize,
        max_depth: usize,
        min_samples_split: usize,
    },
    Lstm {
        hidden: usize,
        dense: usize,
        batch_size: usize,
        epochs: usize,
        learning_rate: f64,
    },
}

impl ModelSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Tree { .. } => "tree",
            ModelSpec::Forest { .. } => "forest",
            ModelSpec::Lstm { .. } => "lstm",
        }
    }

    /// The published defaults for each model family.
    pub fn default_for(kind: &str) -> Option<ModelSpec> {
        match kind {
            "ridge" => Some(ModelSpec::Ridge { alpha: 1.0 }),
            "tree" => Some(ModelSpec::Tree {
                max_depth: 14,
                min_samples_split: 20,
            }),
            "forest" => Some(ModelSpec::Forest {
                n_estimators: 500,
                max_depth: 14,
                min_samples_split: 20,
            }),
            "lstm" => Some(ModelSpec::Lstm {
                hidden: 32,
                dense: 5,
                batch_size: 64,
                epochs: 20,
                learning_rate: 0.001,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub spec: ModelSpec,
    pub lag_count: usize,
    pub window: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(spec: ModelSpec, seed: u64) -> Self {
        PipelineConfig {
            spec,
            lag_count: DEFAULT_LAG_COUNT,
            window: DEFAULT_WINDOW,
            seed,
        }
    }
}

/// One evaluated timestamp, in both normalized and Wh units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionPair {
    pub timestamp: i64,
    pub actual_norm: f64,
    pub predicted_norm: f64,
    pub actual_wh: f64,
    pub predicted_wh: f64,
}

/// Train on the rows of `train_range` only; features for those rows may still
/// reach back before the range for lag history.
pub fn train_on_range(
    data: &AlignedDataset,
    cfg: &PipelineConfig,
    train_range: Range<usize>,
) -> Result<ModelArtifact, PipelineError> {
    let train_rows = data
        .rows
        .get(train_range.clone())
        .filter(|r| !r.is_empty())
        .ok_or(PipelineError::EmptyRange)?;
    let norm = fit_scaler(train_rows)?;
    let normed = AlignedDataset {
        grid_interval: data.grid_interval,
        rows: transform(&data.rows, &norm),
    };

    let is_lstm = matches!(cfg.spec, ModelSpec::Lstm { .. });
    let feature_config = FeatureConfig {
        lag_count: (!is_lstm).then_some(cfg.lag_count),
        window: is_lstm.then_some(cfg.window),
        grid_interval: data.grid_interval,
        seed: cfg.seed,
    };

    let model = match &cfg.spec {
        ModelSpec::Lstm {
            hidden,
            dense,
            batch_size,
            epochs,
            learning_rate,
        } => {
            let seq = windowize(&normed, cfg.window)?;
            let samples: Vec<_> = seq
                .samples
                .into_iter()
                .filter(|s| train_range.contains(&s.target_row))
                .collect();
            if samples.is_empty() {
                return Err(PipelineError::EmptyRange);
            }
            let train_cfg = TrainConfig {
                hidden: *hidden,
                dense1: *dense,
                dense2: *dense,
                batch: *batch_size,
                epochs: *epochs,
                lr: *learning_rate,
                seed: cfg.seed,
                ..Default::default()
            };
            let train_set = crate::features::SequenceDataset {
                window: cfg.window,
                samples,
            };
            let (model, _history) = train_lstm(&train_set, &train_cfg)?;
            TrainedModel::Lstm(model)
        }
        spec => {
            let table = lag_features(&normed, cfg.lag_count)?;
            let rows: Vec<_> = table
                .rows
                .into_iter()
                .filter(|r| train_range.contains(&r.row_index))
                .collect();
            if rows.is_empty() {
                return Err(PipelineError::EmptyRange);
            }
            let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.target).collect();
            match spec {
                ModelSpec::Ridge { alpha } => TrainedModel::Ridge(ridge_fit(&x, &y, *alpha)?),
                ModelSpec::Tree {
                    max_depth,
                    min_samples_split,
                } => TrainedModel::Tree(tree_fit(&x, &y, *max_depth, *min_samples_split)?),
                ModelSpec::Forest {
                    n_estimators,
                    max_depth,
                    min_samples_split,
                } => TrainedModel::Forest(forest_fit(
                    &x,
                    &y,
                    &ForestConfig {
                        n_estimators: *n_estimators,
                        max_depth: *max_depth,
                        min_samples_split: *min_samples_split,
                        seed: cfg.seed,
                        ..Default::default()
                    },
                )?),
                ModelSpec::Lstm { .. } => unreachable!("handled above"),
            }
        }
    };

    Ok(ModelArtifact {
        model,
        norm,
        feature_config,
    })
}

/// Split chronologically and train on the training slice.
pub fn train_pipeline(
    data: &AlignedDataset,
    cfg: &PipelineConfig,
) -> Result<(ModelArtifact, SplitIndices), PipelineError> {
    let split = chronological_split(data.rows.len(), DEFAULT_SPLIT)?;
    let artifact = train_on_range(data, cfg, split.train.clone())?;
    Ok((artifact, split))
}

/// Predict every row of `eval_range` that has enough feature history,
/// pairing each prediction with its actual value.
pub fn predict_pairs(
    artifact: &ModelArtifact,
    data: &AlignedDataset,
    eval_range: Range<usize>,
) -> Result<Vec<PredictionPair>, PipelineError> {
    if eval_range.end > data.rows.len() || eval_range.is_empty() {
        return Err(PipelineError::EmptyRange);
    }
    let normed = AlignedDataset {
        grid_interval: data.grid_interval,
        rows: transform(&data.rows, &artifact.norm),
    };

    let (indices, actual_norm, predicted_norm): (Vec<usize>, Vec<f64>, Vec<f64>) =
        match (&artifact.model, artifact.feature_config.window) {
            (TrainedModel::Lstm(model), Some(window)) => {
                let seq = windowize(&normed, window)?;
                let samples: Vec<_> = seq
                    .samples
                    .into_iter()
                    .filter(|s| eval_range.contains(&s.target_row))
                    .collect();
                if samples.is_empty() {
                    return Err(PipelineError::EmptyRange);
                }
                let preds = lstm_predict(model, &samples)?;
                unzip_with_preds(samples.iter().map(|s| (s.target_row, s.target)), preds)
            }
            (model, _) => {
                let k = artifact.feature_config.lag_count.unwrap_or(DEFAULT_LAG_COUNT);
                let table = lag_features(&normed, k)?;
                let rows: Vec<_> = table
                    .rows
                    .into_iter()
                    .filter(|r| eval_range.contains(&r.row_index))
                    .collect();
                if rows.is_empty() {
                    return Err(PipelineError::EmptyRange);
                }
                let x: Vec<Vec<f64>> = rows.iter().map(|r| r.features.clone()).collect();
                let preds = match model {
                    TrainedModel::Ridge(m) => ridge_predict(m, &x)?,
                    TrainedModel::Tree(m) => tree_predict(m, &x)?,
                    TrainedModel::Forest(m) => forest_predict(m, &x)?,
                    TrainedModel::Lstm(_) => {
                        return Err(ModelError::ShapeMismatch(
                            "sequence model saved without a window".into(),
                        )
                        .into())
                    }
                };
                unzip_with_preds(rows.iter().map(|r| (r.row_index, r.target)), preds)
            }
        };

    Ok(indices
        .into_iter()
        .zip(actual_norm)
        .zip(predicted_norm)
        .map(|((idx, a), p)| PredictionPair {
            timestamp: data.rows[idx].timestamp,
            actual_norm: a,
            predicted_norm: p,
            actual_wh: data.rows[idx].energy,
            predicted_wh: artifact.norm.unscale_energy(p),
        })
        .collect())
}

fn unzip_with_preds(
    pairs: impl Iterator<Item = (usize, f64)>,
    preds: Vec<f64>,
) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let (idx, actual): (Vec<usize>, Vec<f64>) = pairs.unzip();
    (idx, actual, preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{synth_fused, BuildingKind, BuildingProfile};
    use crate::models::{load_model, save_model};

    fn data() -> AlignedDataset {
        synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.02), 21, 5)
    }

    #[test]
    fn ridge_pipeline_learns_synthetic_building() {
        let d = data();
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 1.0 }, 42);
        let (artifact, split) = train_pipeline(&d, &cfg).unwrap();
        let pairs = predict_pairs(&artifact, &d, split.test).unwrap();
        assert!(!pairs.is_empty());
        let mae: f64 = pairs
            .iter()
            .map(|p| (p.actual_norm - p.predicted_norm).abs())
            .sum::<f64>()
            / pairs.len() as f64;
        assert!(mae < 0.08, "ridge normalized mae {mae}");
    }

    #[test]
    fn pairs_unscale_consistently() {
        let d = data();
        let cfg = PipelineConfig::new(
            ModelSpec::Tree {
                max_depth: 8,
                min_samples_split: 4,
            },
            42,
        );
        let (artifact, split) = train_pipeline(&d, &cfg).unwrap();
        let pairs = predict_pairs(&artifact, &d, split.test).unwrap();
        for p in &pairs {
            let back = artifact.norm.unscale_energy(p.actual_norm);
            assert!((back - p.actual_wh).abs() < 1e-6 * p.actual_wh.abs().max(1.0));
        }
    }

    #[test]
    fn artifact_round_trip_preserves_predictions() {
        let d = data();
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 0.5 }, 7);
        let (artifact, split) = train_pipeline(&d, &cfg).unwrap();
        let loaded = load_model(&save_model(&artifact)).unwrap();
        assert_eq!(
            predict_pairs(&artifact, &d, split.test.clone()).unwrap(),
            predict_pairs(&loaded, &d, split.test).unwrap()
        );
    }

    #[test]
    fn lstm_pipeline_round_trips_and_is_seeded() {
        let d = synth_fused(&BuildingProfile::new(BuildingKind::Academic, 0.02), 7, 5);
        let spec = ModelSpec::Lstm {
            hidden: 8,
            dense: 3,
            batch_size: 32,
            epochs: 2,
            learning_rate: 0.001,
        };
        let cfg = PipelineConfig::new(spec, 42);
        let (a1, split) = train_pipeline(&d, &cfg).unwrap();
        let (a2, _) = train_pipeline(&d, &cfg).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(a1.feature_config.window, Some(DEFAULT_WINDOW));
        let pairs = predict_pairs(&a1, &d, split.test).unwrap();
        assert!(!pairs.is_empty());
        for p in &pairs {
            assert!(p.predicted_wh.is_finite());
        }
    }

    #[test]
    fn train_range_excludes_later_rows_from_scaler() {
        let d = data();
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 1.0 }, 42);
        let half = d.rows.len() / 2;
        let artifact = train_on_range(&d, &cfg, 0..half).unwrap();
        let expected = crate::features::fit_scaler(&d.rows[..half]).unwrap();
        assert_eq!(artifact.norm, expected);
    }

    #[test]
    fn empty_range_is_rejected() {
        let d = data();
        let cfg = PipelineConfig::new(ModelSpec::Ridge { alpha: 1.0 }, 42);
        assert!(matches!(
            train_on_range(&d, &cfg, 5..5),
            Err(PipelineError::EmptyRange) | Err(PipelineError::Feature(_))
        ));
        let (artifact, _) = train_pipeline(&d, &cfg).unwrap();
        assert_eq!(
            predict_pairs(&artifact, &d, 5..5),
            Err(PipelineError::EmptyRange)
        );
    }
}
