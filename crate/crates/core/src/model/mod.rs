//! The normal-behaviour model: a representative series plus the statistics of
//! the training warping paths aligned to it.

mod direction;
mod io;
mod matrix;
mod normal;
mod support;
mod thresholds;

pub use direction::{encode_step, Direction, DirectionVector};
pub use io::{
    deserialize_model, deserialize_model_set, serialize_model, serialize_model_set, ModelDocument,
    ModelSetDocument, SCHEMA_VERSION,
};
pub use matrix::{derive_mask, WarpingMatrix};
pub use normal::{ModelSet, NormalModel};
pub use support::{part_support, Aggregator};
pub use thresholds::{ThresholdMode, ThresholdTensor};
