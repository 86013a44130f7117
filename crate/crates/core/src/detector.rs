//! Scoring unseen series against normal models.
//!
//! A query is aligned to the representative inside the model's constraint
//! mask. Each step of the resulting path is then checked: the path part ending
//! there must pass through cells the training paths visited, and its relative
//! support must reach the training minimum stored for that cell and incoming
//! direction. The score is the fraction of steps that pass.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dtw::{dtw, WarpingPath};
use crate::error::{Error, Result};
use crate::model::{part_support, ModelSet, NormalModel, WarpingMatrix};
use crate::par::Execution;
use crate::series::TimeSeries;

pub use crate::model::Aggregator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Normal,
    Anomalous,
    Uncertain,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Normal => "normal",
            Classification::Anomalous => "anomalous",
            Classification::Uncertain => "uncertain",
        })
    }
}

/// Closed score interval `[low, high]` routed to an expert. A degenerate band
/// (`low == high`) is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub low: f64,
    pub high: f64,
}

impl Band {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !low.is_finite() || !high.is_finite() || low > high {
            return Err(Error::InvalidBand { low, high });
        }
        Ok(Band { low, high })
    }

    pub const fn none() -> Self {
        Band {
            low: 0.0,
            high: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.low >= self.high
    }

    pub fn contains(&self, score: f64) -> bool {
        !self.is_empty() && score >= self.low && score <= self.high
    }
}

impl Default for Band {
    fn default() -> Self {
        Band::none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub score: f64,
    pub classification: Classification,
    /// One flag per direction-bearing path step (steps 1..|p|).
    pub per_step_flags: Vec<u8>,
    pub path: Option<WarpingPath>,
    pub infeasible: bool,
    pub pattern_id: String,
    pub pattern_index: usize,
    /// θ_edtwa of the pattern that produced the score.
    pub score_threshold: f64,
}

impl DetectionOutcome {
    /// Two-class decision: uncertain outcomes fall to their side of the
    /// score threshold.
    pub fn is_anomalous(&self) -> bool {
        match self.classification {
            Classification::Normal => false,
            Classification::Anomalous => true,
            Classification::Uncertain => self.infeasible || self.score < self.score_threshold,
        }
    }
}

fn check_end(path: &WarpingPath, end: usize) -> Result<()> {
    if end == 0 || end >= path.len() {
        Err(Error::IndexOutOfRange {
            index: end,
            len: path.len(),
        })
    } else {
        Ok(())
    }
}

/// Support of the path part of `window` steps ending at step `end` (0-based;
/// step 0 is the path start and has no part).
pub fn supp(
    path: &WarpingPath,
    end: usize,
    window: usize,
    matrix: &WarpingMatrix,
    aggregator: Aggregator,
) -> Result<u32> {
    check_end(path, end)?;
    if window == 0 {
        return Err(Error::InvalidWindow);
    }
    Ok(part_support(path, end, window, matrix, aggregator))
}

/// Support divided by the number of training paths through the end cell.
pub fn rsupp(
    path: &WarpingPath,
    end: usize,
    window: usize,
    matrix: &WarpingMatrix,
    aggregator: Aggregator,
) -> Result<f64> {
    let s = supp(path, end, window, matrix, aggregator)?;
    let pos = path.steps()[end];
    let count = matrix.count_paths(pos)?;
    if count == 0 {
        return Err(Error::DivisionByZeroCount {
            row: pos.row,
            col: pos.col,
        });
    }
    Ok(f64::from(s) / f64::from(count))
}

/// Whether the path part ending at `end` is supported well enough. Steps off
/// the model, with no threshold data, or out of range are not.
pub fn detect(path: &WarpingPath, end: usize, model: &NormalModel) -> bool {
    if check_end(path, end).is_err() {
        return false;
    }
    let pos = path.steps()[end];
    let (Some(dir), Ok(count)) = (path.direction(end), model.matrix().count_paths(pos)) else {
        return false;
    };
    if count == 0 {
        return false;
    }
    let Some(theta) = model.thresholds().get(pos, dir) else {
        return false;
    };
    let s = part_support(
        path,
        end,
        model.window(),
        model.matrix(),
        model.aggregator(),
    );
    f64::from(s) / f64::from(count) >= theta
}

pub fn classify(score: f64, score_threshold: f64, band: &Band) -> Classification {
    if band.contains(score) {
        Classification::Uncertain
    } else if score >= score_threshold {
        Classification::Normal
    } else {
        Classification::Anomalous
    }
}

/// Per-step flags and score for a path already aligned against `model`.
pub fn score_path(path: &WarpingPath, model: &NormalModel) -> (f64, Vec<u8>) {
    let flags: Vec<u8> = (1..path.len())
        .map(|end| u8::from(detect(path, end, model)))
        .collect();
    let score = if flags.is_empty() {
        // a single-cell lattice has exactly one possible alignment
        1.0
    } else {
        flags.iter().map(|&f| f64::from(f)).sum::<f64>() / flags.len() as f64
    };
    (score, flags)
}

fn score_against(
    q: &TimeSeries,
    model: &NormalModel,
    index: usize,
    band: &Band,
) -> Result<DetectionOutcome> {
    q.validate()?;
    let mask = model.mask_for(q.len());
    let aligned = dtw(model.representative(), q, Some(&mask))?;
    let pattern_id = model.pattern_id().to_string();
    let score_threshold = model.score_threshold();
    let Some(path) = aligned.path else {
        return Ok(DetectionOutcome {
            score: 0.0,
            classification: Classification::Anomalous,
            per_step_flags: Vec::new(),
            path: None,
            infeasible: true,
            pattern_id,
            pattern_index: index,
            score_threshold,
        });
    };
    let (score, per_step_flags) = score_path(&path, model);
    Ok(DetectionOutcome {
        score,
        classification: classify(score, score_threshold, band),
        per_step_flags,
        path: Some(path),
        infeasible: false,
        pattern_id,
        pattern_index: index,
        score_threshold,
    })
}

/// Scores `q` against a single model with no uncertainty band.
pub fn edtwa_score(q: &TimeSeries, model: &NormalModel) -> Result<DetectionOutcome> {
    score_against(q, model, 0, &Band::none())
}

/// Scores `q` against every pattern and keeps the best (first on ties); the
/// classification uses that pattern's threshold.
pub fn score_set(q: &TimeSeries, models: &ModelSet, band: &Band) -> Result<DetectionOutcome> {
    let mut best: Option<DetectionOutcome> = None;
    for (i, model) in models.models().iter().enumerate() {
        let outcome = score_against(q, model, i, band)?;
        let better = match &best {
            None => true,
            Some(b) => {
                (b.infeasible && !outcome.infeasible)
                    || (!outcome.infeasible && outcome.score > b.score)
            }
        };
        if better {
            best = Some(outcome);
        }
    }
    best.ok_or(Error::EmptyModelSet)
}

/// Sets the score threshold to the lowest score any training series reaches
/// against the model, records the training scores, and returns the threshold.
pub fn data_driven_threshold(
    model: &mut NormalModel,
    training: &[TimeSeries],
    exec: Execution,
) -> Result<f64> {
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let snapshot = &*model;
    let scores = exec.try_map(training, |t| edtwa_score(t, snapshot).map(|o| o.score))?;
    let threshold = scores.iter().copied().fold(f64::INFINITY, f64::min);
    model.set_score_threshold(threshold);
    model.set_training_scores(scores);
    Ok(threshold)
}
