//! Binary model container.
//!
//! Layout (little-endian), documented in `docs/model_format.md`:
//! magic `DECM`, format version `u32`, model-kind tag `u8`, payload length
//! `u64`, then a JSON payload holding the trained model, its normalization
//! parameters, and the feature configuration used at training time.

use super::forest::RandomForest;
use super::lstm::LstmModel;
use super::ridge::RidgeModel;
use super::tree::DecisionTree;
use super::ModelError;
use crate::features::NormalizationParams;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"DECM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Ridge(RidgeModel),
    Tree(DecisionTree),
    Forest(RandomForest),
    Lstm(LstmModel),
}

impl TrainedModel {
    pub fn kind_tag(&self) -> u8 {
        match self {
            TrainedModel::Ridge(_) => 0,
            TrainedModel::Tree(_) => 1,
            TrainedModel::Forest(_) => 2,
            TrainedModel::Lstm(_) => 3,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Ridge(_) => "ridge",
            TrainedModel::Tree(_) => "tree",
            TrainedModel::Forest(_) => "forest",
            TrainedModel::Lstm(_) => "lstm",
        }
    }
}

/// How the model's inputs were assembled from the fused table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Lag count for the tabular models.
    pub lag_count: Option<usize>,
    /// Sequence window for the LSTM.
    pub window: Option<usize>,
    pub grid_interval: i64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub model: TrainedModel,
    pub norm: NormalizationParams,
    pub feature_config: FeatureConfig,
}

pub fn save_model(artifact: &ModelArtifact) -> Vec<u8> {
    let payload = serde_json::to_vec(artifact).expect("artifact serializes");
    let mut out = Vec::with_capacity(payload.len() + 17);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(artifact.model.kind_tag());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn load_model(bytes: &[u8]) -> Result<ModelArtifact, ModelError> {
    if bytes.len() < 17 {
        return Err(ModelError::FormatError("file too short".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(ModelError::FormatError("bad magic header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let kind = bytes[8];
    let len = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
    let payload = bytes
        .get(17..17 + len)
        .ok_or_else(|| ModelError::FormatError("truncated payload".into()))?;
    let artifact: ModelArtifact = serde_json::from_slice(payload)
        .map_err(|e| ModelError::FormatError(format!("payload: {e}")))?;
    if artifact.model.kind_tag() != kind {
        return Err(ModelError::FormatError(format!(
            "kind tag {kind} does not match payload kind {}",
            artifact.model.kind_tag()
        )));
    }
    Ok(artifact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{forest_fit, lstm_predict, ridge_fit, tree_fit, ForestConfig};
    use crate::models::{LstmConfig, LstmModel};

    fn norm() -> NormalizationParams {
        NormalizationParams {
            energy: (0.0, 100.0),
            occupancy: (0.0, 50.0),
            temperature: (2.0, 48.0),
            humidity: (5.0, 100.0),
            calendar: (0.0, 1.0),
        }
    }

    fn feature_config() -> FeatureConfig {
        FeatureConfig {
            lag_count: Some(3),
            window: None,
            grid_interval: 600,
            seed: 42,
        }
    }

    fn artifact(model: TrainedModel) -> ModelArtifact {
        ModelArtifact {
            model,
            norm: norm(),
            feature_config: feature_config(),
        }
    }

    #[test]
    fn round_trip_all_four_kinds() {
        let x = vec![vec![1.0, 2.0], vec![2.0, 0.5], vec![3.0, -1.0], vec![4.0, 3.0]];
        let y = vec![1.0, 2.0, 3.0, 4.0];
        let models = vec![
            TrainedModel::Ridge(ridge_fit(&x, &y, 0.5).unwrap()),
            TrainedModel::Tree(tree_fit(&x, &y, 3, 2).unwrap()),
            TrainedModel::Forest(
                forest_fit(
                    &x,
                    &y,
                    &ForestConfig {
                        n_estimators: 3,
                        max_depth: 3,
                        min_samples_split: 2,
                        ..Default::default()
                    },
                )
                .unwrap(),
            ),
            TrainedModel::Lstm(LstmModel::init(LstmConfig::new(4, 3, 3), 7)),
        ];
        for m in models {
            let a = artifact(m);
            let bytes = save_model(&a);
            let loaded = load_model(&bytes).unwrap();
            assert_eq!(a, loaded);
            // Save is stable: re-saving the loaded artifact is byte-identical.
            assert_eq!(bytes, save_model(&loaded));
        }
    }

    #[test]
    fn loaded_lstm_predicts_identically() {
        let m = LstmModel::init(LstmConfig::new(6, 4, 4), 9);
        let samples = vec![crate::features::SequenceSample {
            target_row: 0,
            sequence: vec![[0.1, 0.2, 0.3, 0.4, 1.0]; 3],
            target: 0.5,
        }];
        let before = lstm_predict(&m, &samples).unwrap();
        let a = artifact(TrainedModel::Lstm(m));
        let loaded = load_model(&save_model(&a)).unwrap();
        let TrainedModel::Lstm(m2) = loaded.model else {
            panic!("kind changed")
        };
        assert_eq!(before, lstm_predict(&m2, &samples).unwrap());
    }

    #[test]
    fn corrupt_magic_rejected() {
        let a = artifact(TrainedModel::Ridge(RidgeModel {
            weights: vec![1.0],
            intercept: 0.0,
            alpha: 0.0,
        }));
        let mut bytes = save_model(&a);
        bytes[0] = b'X';
        assert!(matches!(load_model(&bytes), Err(ModelError::FormatError(_))));
    }

    #[test]
    fn version_mismatch_rejected() {
        let a = artifact(TrainedModel::Ridge(RidgeModel {
            weights: vec![1.0],
            intercept: 0.0,
            alpha: 0.0,
        }));
        let mut bytes = save_model(&a);
        bytes[4..8].copy_from_slice(&99u32.to_le_bytes());
        assert_eq!(load_model(&bytes), Err(ModelError::UnsupportedVersion(99)));
    }
}
