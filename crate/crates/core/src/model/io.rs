//! Versioned JSON documents for models.
//!
//! A single model document:
//!
//! ```json
//! { "version": 1, "representative": {"id": "...", "values": [...]},
//!   "window": 5, "aggregator": "min", "threshold_mode": "min_supp_over_count",
//!   "score_threshold": 0.9,
//!   "matrix": {"rows": m, "cols": n, "cells": [[[r, d, u], ...], ...]},
//!   "mask": [[0, 1, ...], ...], "thresholds": [[[t|null, t|null, t|null], ...], ...],
//!   "training_paths": [[[row, col], ...], ...], "training_scores": [...] }
//! ```
//!
//! A model set wraps the same bodies: `{ "version": 1, "models": [...] }`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dtw::{ConstraintMask, WarpingPath};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::direction::DirectionVector;
use super::matrix::WarpingMatrix;
use super::normal::{ModelSet, NormalModel};
use super::support::Aggregator;
use super::thresholds::{ThresholdMode, ThresholdTensor};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentativeDoc {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Vec<[u32; 3]>>,
}

/// Body shared by single-model and model-set documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelBody {
    pub representative: RepresentativeDoc,
    pub window: usize,
    pub aggregator: Aggregator,
    pub threshold_mode: ThresholdMode,
    pub score_threshold: f64,
    pub matrix: MatrixDoc,
    pub mask: Vec<Vec<u8>>,
    pub thresholds: Vec<Vec<[Option<f64>; 3]>>,
    pub training_paths: Vec<WarpingPath>,
    pub training_scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_threshold: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u64,
    #[serde(flatten)]
    pub model: ModelBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSetDocument {
    pub version: u64,
    pub models: Vec<ModelBody>,
}

fn chunk_rows<T: Clone>(flat: &[T], cols: usize, rows: usize) -> Vec<Vec<T>> {
    if cols == 0 {
        return vec![Vec::new(); rows];
    }
    flat.chunks(cols).map(<[T]>::to_vec).collect()
}

impl From<&NormalModel> for ModelBody {
    fn from(m: &NormalModel) -> Self {
        let (rows, cols) = m.dims();
        let cells: Vec<[u32; 3]> = m.matrix().cells().iter().map(|c| c.0).collect();
        ModelBody {
            representative: RepresentativeDoc {
                id: m.representative().id.clone(),
                values: m.representative().values.clone(),
            },
            window: m.window(),
            aggregator: m.aggregator(),
            threshold_mode: m.threshold_mode(),
            score_threshold: m.score_threshold(),
            matrix: MatrixDoc {
                rows,
                cols,
                cells: chunk_rows(&cells, cols, rows),
            },
            mask: m.mask().to_rows(),
            thresholds: chunk_rows(m.thresholds().values(), cols, rows),
            training_paths: m.training_paths().to_vec(),
            training_scores: m.training_scores().to_vec(),
            baseline_threshold: m.baseline_threshold(),
        }
    }
}

impl TryFrom<ModelBody> for NormalModel {
    type Error = Error;

    fn try_from(body: ModelBody) -> Result<Self> {
        let MatrixDoc { rows, cols, cells } = body.matrix;
        let malformed = |what: &str| Error::MalformedDocument(what.to_string());
        if cells.len() != rows || cells.iter().any(|r| r.len() != cols) {
            return Err(malformed("matrix cells do not match rows x cols"));
        }
        if body.thresholds.len() != rows || body.thresholds.iter().any(|r| r.len() != cols) {
            return Err(malformed("thresholds do not match rows x cols"));
        }
        if body.mask.len() != rows || body.mask.iter().any(|r| r.len() != cols) {
            return Err(malformed("mask does not match rows x cols"));
        }
        if body.mask.iter().flatten().any(|&b| b > 1) {
            return Err(malformed("mask entries must be 0 or 1"));
        }
        let matrix = WarpingMatrix::from_cells(
            rows,
            cols,
            cells.into_iter().flatten().map(DirectionVector).collect(),
        );
        let mask = if rows == 0 {
            ConstraintMask::empty(0, cols)
        } else {
            ConstraintMask::from_rows(&body.mask)?
        };
        let thresholds = ThresholdTensor::from_values(
            rows,
            cols,
            body.thresholds.into_iter().flatten().collect(),
        );
        let representative = TimeSeries::new(body.representative.id, body.representative.values);
        representative
            .validate()
            .map_err(|e| Error::MalformedDocument(e.to_string()))?;
        let model = NormalModel::from_parts(
            representative,
            body.window,
            body.aggregator,
            body.threshold_mode,
            body.score_threshold,
            matrix,
            mask,
            thresholds,
            body.training_paths,
            body.training_scores,
            body.baseline_threshold,
        );
        model
            .check_consistency()
            .map_err(|e| Error::MalformedDocument(e.to_string()))?;
        Ok(model)
    }
}

fn check_version(value: &Value) -> Result<()> {
    let found = value
        .get("version")
        .ok_or_else(|| Error::MalformedDocument("missing `version`".into()))?
        .as_u64()
        .ok_or_else(|| Error::MalformedDocument("`version` must be an integer".into()))?;
    if found != SCHEMA_VERSION {
        return Err(Error::SchemaVersionMismatch {
            found,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(())
}

fn parse(text: &str) -> Result<Value> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    check_version(&value)?;
    Ok(value)
}

pub fn serialize_model(model: &NormalModel) -> String {
    let doc = ModelDocument {
        version: SCHEMA_VERSION,
        model: model.into(),
    };
    serde_json::to_string(&doc).expect("model documents always serialize")
}

pub fn deserialize_model(text: &str) -> Result<NormalModel> {
    let value = parse(text)?;
    let doc: ModelDocument =
        serde_json::from_value(value).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    doc.model.try_into()
}

pub fn serialize_model_set(set: &ModelSet) -> String {
    let doc = ModelSetDocument {
        version: SCHEMA_VERSION,
        models: set.models().iter().map(ModelBody::from).collect(),
    };
    serde_json::to_string(&doc).expect("model documents always serialize")
}

/// Accepts either a model-set document or a single-model document.
pub fn deserialize_model_set(text: &str) -> Result<ModelSet> {
    let value = parse(text)?;
    if value.get("models").is_some() {
        let doc: ModelSetDocument =
            serde_json::from_value(value).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        let models = doc
            .models
            .into_iter()
            .map(NormalModel::try_from)
            .collect::<Result<Vec<_>>>()?;
        ModelSet::new(models).map_err(|e| Error::MalformedDocument(e.to_string()))
    } else {
        let doc: ModelDocument =
            serde_json::from_value(value).map_err(|e| Error::MalformedDocument(e.to_string()))?;
        Ok(ModelSet::single(doc.model.try_into()?))
    }
}
