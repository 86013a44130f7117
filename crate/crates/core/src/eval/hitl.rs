use serde::{Deserialize, Serialize};

use crate::detector::{score_set, Band, Classification};
use crate::error::{Error, Result};
use crate::model::ModelSet;
use crate::par::Execution;
use crate::series::{Label, TimeSeries};

use super::metrics::ConfusionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitlReport {
    pub queried_count: usize,
    pub stream_len: usize,
    pub before: ConfusionMatrix,
    pub after: ConfusionMatrix,
    pub f1_before: f64,
    pub f1_after: f64,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
}

/// Replays `stream` with a simulated expert.
///
/// "Before" classifies the whole stream with the frozen initial model. "After"
/// walks the stream in order: outcomes inside `band` are queried, take the
/// ground-truth label as the final decision, and update the model with the
/// query's warping path before the next element is scored. Returns the
/// updated model alongside the report.
pub fn simulate_hitl(
    models: &ModelSet,
    stream: &[TimeSeries],
    band: Band,
    exec: Execution,
) -> Result<(HitlReport, ModelSet)> {
    let band = Band::new(band.low, band.high)?;
    if let Some(s) = stream.iter().find(|s| s.known_label().is_none()) {
        return Err(Error::UnlabeledSeries(s.id.clone()));
    }
    let truth = |s: &TimeSeries| s.known_label() == Some(Label::Anomalous);

    let frozen = exec.try_map(stream, |s| score_set(s, models, &Band::none()))?;
    let mut before = ConfusionMatrix::default();
    for (s, o) in stream.iter().zip(&frozen) {
        before.record(truth(s), o.is_anomalous());
    }

    let mut live = models.clone();
    let mut after = ConfusionMatrix::default();
    let mut queried_count = 0;
    for s in stream {
        let outcome = score_set(s, &live, &band)?;
        let decision = if outcome.classification == Classification::Uncertain {
            queried_count += 1;
            let path = outcome
                .path
                .as_ref()
                .expect("uncertain outcomes are feasible");
            let model = live
                .get_mut(outcome.pattern_index)
                .expect("outcome refers to a pattern of this set");
            if truth(s) {
                model.update_anomalous(path)?;
            } else {
                model.update_normal(path)?;
            }
            truth(s)
        } else {
            outcome.is_anomalous()
        };
        after.record(truth(s), decision);
    }

    let report = HitlReport {
        queried_count,
        stream_len: stream.len(),
        before,
        after,
        f1_before: before.f1(),
        f1_after: after.f1(),
        accuracy_before: before.accuracy(),
        accuracy_after: after.accuracy(),
    };
    Ok((report, live))
}
