use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::series::{Label, TimeSeries};

/// Anomalous is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        ConfusionMatrix { tn, fp, fn_, tp }
    }

    pub fn record(&mut self, truth_anomalous: bool, predicted_anomalous: bool) {
        match (truth_anomalous, predicted_anomalous) {
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (true, true) => self.tp += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    /// `2tp / (2tp + fp + fn)`, zero when nothing was positive.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => (self.tp + self.tn) as f64 / n as f64,
        }
    }
}

impl fmt::Display for ConfusionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TN {:>5}  FP {:>5}  FN {:>5}  TP {:>5}  F1 {:.4}  Acc {:.4}",
            self.tn,
            self.fp,
            self.fn_,
            self.tp,
            self.f1(),
            self.accuracy()
        )
    }
}

impl ConfusionMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain counters serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub f1: f64,
    pub accuracy: f64,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        EvalReport {
            confusion,
            f1: confusion.f1(),
            accuracy: confusion.accuracy(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "confusion": self.confusion.to_json(),
            "f1": self.f1,
            "accuracy": self.accuracy,
        })
    }
}

/// Runs a two-class detector (`true` = anomalous) over a labeled test set.
pub fn evaluate<F>(detector: F, test: &[TimeSeries], exec: Execution) -> Result<EvalReport>
where
    F: Fn(&TimeSeries) -> Result<bool> + Sync + Send,
{
    if let Some(s) = test.iter().find(|s| s.known_label().is_none()) {
        return Err(Error::UnlabeledSeries(s.id.clone()));
    }
    let predictions = exec.try_map(test, |s| detector(s))?;
    let mut confusion = ConfusionMatrix::default();
    for (s, predicted) in test.iter().zip(predictions) {
        confusion.record(s.known_label() == Some(Label::Anomalous), predicted);
    }
    Ok(EvalReport::from_confusion(confusion))
}
