//! Building energy consumption forecasting.
//!
//! The crate covers the full pipeline: parsing multi-rate sensor channels,
//! fusing them onto a common 10-minute grid, min-max normalization fitted on
//! the training slice only, chronological train/validation/test splitting,
//! calendar-matched lag features, four regressors (ridge, decision tree,
//! random forest, LSTM trained with BPTT + RMSProp), two-stage hyperparameter
//! search, and an evaluation harness producing per-building, horizon, and
//! training-size reports.
//!
//! See the `examples/` directory for runnable walkthroughs of each capability;
//! the `enercast` binary wires the same pieces into batch subcommands.

pub mod align;
pub mod cli;
pub mod datagen;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod tune;

pub use align::AlignedDataset;
pub use features::{NormalizationParams, SequenceDataset, SplitIndices, SupervisedTable};
pub use ingest::{Channel, RawSeries, ValidatedSeries};
pub use models::{ModelArtifact, TrainedModel};
pub use pipeline::{ModelSpec, PipelineConfig};

