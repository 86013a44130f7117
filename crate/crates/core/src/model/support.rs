use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dtw::WarpingPath;

use super::matrix::WarpingMatrix;

/// How the per-step supports inside a path part are combined.
///
/// `Min` takes the weakest step, `Max` the strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Min,
    Max,
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregator::Min => "min",
            Aggregator::Max => "max",
        })
    }
}

impl FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Aggregator::Min),
            "max" => Ok(Aggregator::Max),
            other => Err(format!(
                "unknown aggregator `{other}` (expected min or max)"
            )),
        }
    }
}

/// Support of the path part ending at step `end`: the aggregate, over the
/// `window` steps before `end` (never reaching back to the start step), of how
/// many training paths entered the same cell in the same direction. At
/// `end == 1` no such step exists and the end step itself is used.
///
/// Callers guarantee `1 <= end < path.len()` and `window >= 1`; positions
/// outside the matrix count as zero.
pub fn part_support(
    path: &WarpingPath,
    end: usize,
    window: usize,
    matrix: &WarpingMatrix,
    aggregator: Aggregator,
) -> u32 {
    debug_assert!(end >= 1 && end < path.len() && window >= 1);
    let (lo, hi) = if end == 1 {
        (1, 1)
    } else {
        (end.saturating_sub(window).max(1), end - 1)
    };
    let steps = path.steps();
    let per_step = (lo..=hi).map(|j| {
        path.direction(j)
            .map_or(0, |dir| matrix.directional(steps[j], dir))
    });
    match aggregator {
        Aggregator::Min => per_step.min(),
        Aggregator::Max => per_step.max(),
    }
    .unwrap_or(0)
}
