use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth label of a series. Anomalous is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
    Unlabeled,
}

impl Label {
    pub fn as_token(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
            Label::Unlabeled => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub id: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Self {
        TimeSeries {
            id: id.into(),
            values,
            label: None,
        }
    }

    pub fn labeled(id: impl Into<String>, values: Vec<f64>, label: Label) -> Self {
        TimeSeries {
            id: id.into(),
            values,
            label: Some(label),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the invariants every series entering DTW must satisfy.
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::EmptySeries(self.id.clone()));
        }
        if let Some(index) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample {
                id: self.id.clone(),
                index,
            });
        }
        Ok(())
    }

    /// `Unlabeled` and a missing label are the same thing.
    pub fn known_label(&self) -> Option<Label> {
        match self.label {
            Some(Label::Unlabeled) | None => None,
            other => other,
        }
    }
}
