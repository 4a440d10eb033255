//! The four regressors and their shared plumbing.

pub mod artifact;
pub mod forest;
pub mod lstm;
pub mod ridge;
pub mod rmsprop;
pub mod tree;

pub use artifact::{load_model, save_model, ModelArtifact, TrainedModel};
pub use forest::{forest_fit, forest_predict, ForestConfig, RandomForest};
pub use lstm::{
    lstm_backward, lstm_forward, lstm_predict, train_lstm, LstmConfig, LstmModel, TrainConfig,
};
pub use ridge::{ridge_fit, ridge_fit_no_intercept, ridge_predict, RidgeModel};
pub use rmsprop::{rmsprop_step, RmspropState};
pub use tree::{tree_fit, tree_predict, DecisionTree, Node};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("singular system; cannot solve")]
    SingularSystem,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("activation cache does not match this backward pass")]
    StaleCache,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("training diverged: non-finite loss at epoch {0}")]
    DivergedTraining(usize),
    #[error("bad model file: {0}")]
    FormatError(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
}
