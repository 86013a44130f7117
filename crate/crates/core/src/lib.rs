//! Anomaly detection for time series from the statistics of DTW warping paths.
//!
//! A normal behaviour pattern is modelled as a representative series plus a
//! *warping matrix*: for every lattice cell, how many training warping paths
//! entered it moving right, diagonally or up. Unseen series are aligned to the
//! representative inside the region the training paths covered, and every step
//! of the resulting path is checked for how well the training paths support
//! the path part leading to it. Expert verdicts update the matrix in place.
//!
//! Modules, bottom up:
//!
//! * [`dtw`]: constrained DTW with deterministic backtracking and a brute-force oracle
//! * [`model`]: warping matrix, constraint mask, threshold tensor and the normal model
//! * [`detector`]: support, relative support, per-step detection and scoring
//! * [`training`]: representative selection and model construction
//! * [`eval`]: baseline detector, metrics, CSV ingestion, synthetic data and the HITL simulator

pub mod detector;
pub mod dtw;
mod error;
pub mod eval;
pub mod model;
pub mod par;
mod series;
pub mod training;

pub use detector::{
    classify, data_driven_threshold, detect, edtwa_score, rsupp, score_set, supp, Aggregator, Band,
    Classification, DetectionOutcome,
};
pub use dtw::{
    brute_force_dtw, dtw, normalized_distance, pointwise_distance, ConstraintMask, DtwResult, Pos,
    WarpingPath,
};
pub use error::{Error, Result};
pub use model::{
    Direction, DirectionVector, ModelSet, NormalModel, ThresholdMode, ThresholdTensor,
    WarpingMatrix,
};
pub use par::Execution;
pub use series::{Label, TimeSeries};
pub use training::{
    rebuild_with_window, select_representative, train, validate_model_visual, Heatmap, TrainConfig,
    TrainingSet,
};
