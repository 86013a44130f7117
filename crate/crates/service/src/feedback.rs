//! Append-only feedback log and replay.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use warpwatch::{Error, ModelSet, Result, WarpingPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Normal,
    Anomalous,
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Verdict::Normal),
            "anomalous" => Ok(Verdict::Anomalous),
            other => Err(format!(
                "unknown label {other:?}, expected normal or anomalous"
            )),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Normal => "normal",
            Verdict::Anomalous => "anomalous",
        })
    }
}

/// One applied expert verdict. `model_version` is the version the update produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub seq: u64,
    pub item_id: u64,
    pub pattern_index: usize,
    pub label: Verdict,
    pub path: WarpingPath,
    pub model_version: u64,
}

/// Applies a single verdict to the pattern it was detected against.
pub fn apply(models: &mut ModelSet, event: &FeedbackEvent) -> Result<()> {
    let len = models.len();
    let model = models
        .get_mut(event.pattern_index)
        .ok_or(Error::IndexOutOfRange {
            index: event.pattern_index,
            len,
        })?;
    match event.label {
        Verdict::Normal => model.update_normal(&event.path),
        Verdict::Anomalous => model.update_anomalous(&event.path).map(|_| ()),
    }
}

/// Rebuilds the live model from the snapshot the log started at.
pub fn replay(initial: &ModelSet, events: &[FeedbackEvent]) -> Result<ModelSet> {
    let mut models = initial.clone();
    for event in events {
        apply(&mut models, event)?;
    }
    Ok(models)
}

/// Parses a JSON-lines log. Blank lines are skipped.
pub fn parse_log(text: &str) -> Result<Vec<FeedbackEvent>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| Error::MalformedRow {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
