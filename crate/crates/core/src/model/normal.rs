use crate::dtw::{ConstraintMask, WarpingPath};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

use super::matrix::{derive_mask, refresh_mask_along, WarpingMatrix};
use super::support::Aggregator;
use super::thresholds::{ThresholdMode, ThresholdTensor};

/// One normal behaviour pattern: representative `R`, warping matrix, the
/// constraint mask derived from it, and the per-cell thresholds.
///
/// The training paths are kept so thresholds can be recomputed after an
/// update; the matrix alone cannot recover per-part minima.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModel {
    representative: TimeSeries,
    window: usize,
    aggregator: Aggregator,
    threshold_mode: ThresholdMode,
    score_threshold: f64,
    matrix: WarpingMatrix,
    mask: ConstraintMask,
    thresholds: ThresholdTensor,
    training_paths: Vec<WarpingPath>,
    training_scores: Vec<f64>,
    baseline_threshold: Option<f64>,
}

impl NormalModel {
    /// Builds matrix, mask and thresholds from training paths aligned against
    /// `representative` on a `|R| x cols` lattice. The score threshold starts
    /// at 1.0 until calibrated.
    pub fn from_paths(
        representative: TimeSeries,
        cols: usize,
        paths: Vec<WarpingPath>,
        window: usize,
        aggregator: Aggregator,
        threshold_mode: ThresholdMode,
    ) -> Result<Self> {
        representative.validate()?;
        let rows = representative.len();
        let matrix = WarpingMatrix::build(&paths, rows, cols)?;
        let mask = derive_mask(&matrix);
        let thresholds =
            ThresholdTensor::build(&paths, &matrix, window, aggregator, threshold_mode)?;
        Ok(NormalModel {
            representative,
            window,
            aggregator,
            threshold_mode,
            score_threshold: 1.0,
            matrix,
            mask,
            thresholds,
            training_paths: paths,
            training_scores: Vec::new(),
            baseline_threshold: None,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        representative: TimeSeries,
        window: usize,
        aggregator: Aggregator,
        threshold_mode: ThresholdMode,
        score_threshold: f64,
        matrix: WarpingMatrix,
        mask: ConstraintMask,
        thresholds: ThresholdTensor,
        training_paths: Vec<WarpingPath>,
        training_scores: Vec<f64>,
        baseline_threshold: Option<f64>,
    ) -> Self {
        NormalModel {
            representative,
            window,
            aggregator,
            threshold_mode,
            score_threshold,
            matrix,
            mask,
            thresholds,
            training_paths,
            training_scores,
            baseline_threshold,
        }
    }

    pub fn representative(&self) -> &TimeSeries {
        &self.representative
    }

    /// Pattern identifier, the representative's id.
    pub fn pattern_id(&self) -> &str {
        &self.representative.id
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn aggregator(&self) -> Aggregator {
        self.aggregator
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        self.threshold_mode
    }

    pub fn score_threshold(&self) -> f64 {
        self.score_threshold
    }

    pub fn set_score_threshold(&mut self, threshold: f64) {
        self.score_threshold = threshold;
    }

    pub fn matrix(&self) -> &WarpingMatrix {
        &self.matrix
    }

    pub fn mask(&self) -> &ConstraintMask {
        &self.mask
    }

    pub fn thresholds(&self) -> &ThresholdTensor {
        &self.thresholds
    }

    pub fn training_paths(&self) -> &[WarpingPath] {
        &self.training_paths
    }

    pub fn training_count(&self) -> usize {
        self.training_paths.len()
    }

    pub fn training_scores(&self) -> &[f64] {
        &self.training_scores
    }

    pub fn set_training_scores(&mut self, scores: Vec<f64>) {
        self.training_scores = scores;
    }

    pub fn baseline_threshold(&self) -> Option<f64> {
        self.baseline_threshold
    }

    pub fn set_baseline_threshold(&mut self, threshold: Option<f64>) {
        self.baseline_threshold = threshold;
    }

    pub fn dims(&self) -> (usize, usize) {
        self.matrix.dims()
    }

    /// The mask cropped or zero-padded to a query of `len` samples.
    pub fn mask_for(&self, len: usize) -> ConstraintMask {
        let (rows, cols) = self.mask.dims();
        if cols == len {
            self.mask.clone()
        } else {
            self.mask.resized(rows, len)
        }
    }

    /// Folds a confirmed-normal path into the model: counters grow along the
    /// path, the path joins the training set and thresholds are recomputed.
    pub fn update_normal(&mut self, path: &WarpingPath) -> Result<()> {
        let (rows, cols) = self.matrix.dims();
        path.check_bounds(rows, cols)?;
        self.matrix.add_path(path)?;
        refresh_mask_along(&mut self.mask, &self.matrix, path);
        self.training_paths.push(path.clone());
        self.refresh_thresholds();
        Ok(())
    }

    /// Reverse update for a confirmed-anomalous path: counters along the path
    /// are decremented (floored at zero) and one identical training path, if
    /// present, is forgotten. Returns whether any counter was clamped.
    pub fn update_anomalous(&mut self, path: &WarpingPath) -> Result<bool> {
        let (rows, cols) = self.matrix.dims();
        path.check_bounds(rows, cols)?;
        let clamped = self.matrix.subtract_path(path)?;
        refresh_mask_along(&mut self.mask, &self.matrix, path);
        if let Some(k) = self.training_paths.iter().rposition(|p| p == path) {
            self.training_paths.remove(k);
        }
        self.refresh_thresholds();
        Ok(clamped)
    }

    fn refresh_thresholds(&mut self) {
        self.thresholds.rebuild(
            &self.training_paths,
            &self.matrix,
            self.window,
            self.aggregator,
            self.threshold_mode,
        );
    }

    /// Structural consistency between the parts, used after deserialization.
    pub fn check_consistency(&self) -> Result<()> {
        let (rows, cols) = self.matrix.dims();
        let bad = |what: &str| Err(Error::MalformedDocument(what.to_string()));
        if rows != self.representative.len() {
            return bad("matrix rows differ from representative length");
        }
        if self.mask.dims() != (rows, cols) {
            return bad("mask dims differ from matrix dims");
        }
        if self.thresholds.dims() != (rows, cols) {
            return bad("threshold dims differ from matrix dims");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        for p in &self.training_paths {
            p.check_bounds(rows, cols)?;
        }
        Ok(())
    }
}

/// The k normal patterns a query is scored against.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    models: Vec<NormalModel>,
}

impl ModelSet {
    pub fn new(models: Vec<NormalModel>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::EmptyModelSet);
        }
        Ok(ModelSet { models })
    }

    pub fn single(model: NormalModel) -> Self {
        ModelSet {
            models: vec![model],
        }
    }

    pub fn models(&self) -> &[NormalModel] {
        &self.models
    }

    pub fn models_mut(&mut self) -> &mut [NormalModel] {
        &mut self.models
    }

    pub fn get(&self, index: usize) -> Option<&NormalModel> {
        self.models.get(index)
    }

    pub fn get_mut(&mut self, index: usize) -> Option<&mut NormalModel> {
        self.models.get_mut(index)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
