use serde::{Deserialize, Serialize};

use crate::dtw::{dtw, normalized_distance};
use crate::error::{Error, Result};
use crate::model::ModelSet;
use crate::par::Execution;
use crate::series::TimeSeries;

/// Plain DTW detector: anomalous when the normalized distance to the
/// representative exceeds the largest one seen in training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub representative: TimeSeries,
    pub threshold: f64,
}

pub fn train_baseline(
    training: &[TimeSeries],
    representative: &TimeSeries,
    exec: Execution,
) -> Result<BaselineModel> {
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let distances = exec.try_map(training, |t| {
        dtw(representative, t, None).and_then(|r| normalized_distance(&r))
    })?;
    Ok(BaselineModel {
        representative: representative.clone(),
        threshold: distances.into_iter().fold(0.0, f64::max),
    })
}

/// `true` when `q` is anomalous. Equality with the threshold is normal.
pub fn detect_baseline(q: &TimeSeries, model: &BaselineModel) -> Result<bool> {
    let d = normalized_distance(&dtw(&model.representative, q, None)?)?;
    Ok(d > model.threshold)
}

/// Baseline over every pattern of a model set carrying baseline thresholds:
/// normal if any pattern accepts the query.
pub fn detect_baseline_set(q: &TimeSeries, models: &ModelSet) -> Result<bool> {
    for m in models.models() {
        let threshold = m.baseline_threshold().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "pattern `{}` has no baseline threshold",
                m.pattern_id()
            ))
        })?;
        let baseline = BaselineModel {
            representative: m.representative().clone(),
            threshold,
        };
        if !detect_baseline(q, &baseline)? {
            return Ok(false);
        }
    }
    Ok(true)
}
