//! Building normal models from labeled-normal training data.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::detector::{data_driven_threshold, score_path};
use crate::dtw::{dtw, normalized_distance};
use crate::error::{Error, Result};
use crate::model::{Aggregator, NormalModel, ThresholdMode};
use crate::par::Execution;
use crate::series::{Label, TimeSeries};

/// Group name used when no partition is supplied.
pub const DEFAULT_GROUP: &str = "default";

/// Window length used when none is given.
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    series: Vec<TimeSeries>,
    /// series id -> group name
    partition: Option<HashMap<String, String>>,
}

impl TrainingSet {
    /// Every series must be non-empty and labeled normal (an absent label is
    /// accepted as normal).
    pub fn new(series: Vec<TimeSeries>) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        for s in &series {
            s.validate()?;
            if matches!(s.label, Some(Label::Anomalous)) {
                return Err(Error::NotNormal(s.id.clone()));
            }
        }
        Ok(TrainingSet {
            series,
            partition: None,
        })
    }

    /// Assigns each series to a pattern group. Series missing from the map are
    /// rejected.
    pub fn with_partition(mut self, partition: HashMap<String, String>) -> Result<Self> {
        if let Some(s) = self.series.iter().find(|s| !partition.contains_key(&s.id)) {
            return Err(Error::InvalidConfig(format!(
                "series `{}` has no partition group",
                s.id
            )));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    /// Groups in first-appearance order.
    pub fn groups(&self) -> Vec<(String, Vec<TimeSeries>)> {
        let Some(partition) = &self.partition else {
            return vec![(DEFAULT_GROUP.to_string(), self.series.clone())];
        };
        let mut order: Vec<String> = Vec::new();
        let mut members: HashMap<String, Vec<TimeSeries>> = HashMap::new();
        for s in &self.series {
            let g = &partition[&s.id];
            if !members.contains_key(g) {
                order.push(g.clone());
            }
            members.entry(g.clone()).or_default().push(s.clone());
        }
        order
            .into_iter()
            .map(|g| {
                let m = members.remove(&g).unwrap_or_default();
                (g, m)
            })
            .collect()
    }
}

/// The group member with the smallest summed DTW distance to all others;
/// ties go to the lowest id.
pub fn select_representative(group: &[TimeSeries], exec: Execution) -> Result<TimeSeries> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let sums = exec.try_map(group, |candidate| {
        group.iter().try_fold(0.0, |acc, other| {
            dtw(candidate, other, None).map(|r| acc + r.distance)
        })
    })?;
    let best = group
        .iter()
        .zip(&sums)
        .min_by(|(a, da), (b, db)| da.total_cmp(db).then_with(|| a.id.cmp(&b.id)))
        .map(|(s, _)| s.clone())
        .expect("group is non-empty");
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub window: usize,
    pub aggregator: Aggregator,
    pub threshold_mode: ThresholdMode,
    /// Expert θ_edtwa; the data-driven minimum is used when absent.
    pub score_threshold: Option<f64>,
    pub execution: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window: DEFAULT_WINDOW,
            aggregator: Aggregator::Min,
            threshold_mode: ThresholdMode::MinSuppOverCount,
            score_threshold: None,
            execution: Execution::default(),
        }
    }
}

/// Trains one model per pattern group.
///
/// `representatives` maps group names to expert-provided patterns; groups
/// without one use their medoid. Training alignments run without a mask.
/// Each model also records the largest normalized DTW distance to its
/// training series, the threshold of the plain distance baseline.
pub fn train(
    ts: &TrainingSet,
    representatives: &BTreeMap<String, TimeSeries>,
    config: &TrainConfig,
) -> Result<Vec<NormalModel>> {
    if config.window == 0 {
        return Err(Error::InvalidWindow);
    }
    let exec = config.execution;
    let mut models = Vec::new();
    for (group, members) in ts.groups() {
        let representative = match representatives.get(&group) {
            Some(r) => {
                r.validate()?;
                r.clone()
            }
            None => select_representative(&members, exec)?,
        };
        let cols = members.iter().map(TimeSeries::len).max().unwrap_or(0);
        let alignments = exec.try_map(&members, |t| dtw(&representative, t, None))?;
        let mut baseline = 0.0f64;
        let mut paths = Vec::with_capacity(alignments.len());
        for a in &alignments {
            baseline = baseline.max(normalized_distance(a)?);
            paths.push(
                a.path
                    .clone()
                    .expect("unconstrained DTW is always feasible"),
            );
        }
        let mut model = NormalModel::from_paths(
            representative,
            cols,
            paths,
            config.window,
            config.aggregator,
            config.threshold_mode,
        )?;
        data_driven_threshold(&mut model, &members, exec)?;
        if let Some(expert) = config.score_threshold {
            model.set_score_threshold(expert);
        }
        model.set_baseline_threshold(Some(baseline));
        models.push(model);
    }
    Ok(models)
}

/// Rebuilds `model` with another window from its stored training paths.
///
/// The score threshold is recalibrated to the lowest score of those paths,
/// which are the unconstrained alignments of the training series.
pub fn rebuild_with_window(
    model: &NormalModel,
    window: usize,
    exec: Execution,
) -> Result<NormalModel> {
    if model.training_paths().is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let (_, cols) = model.dims();
    let mut rebuilt = NormalModel::from_paths(
        model.representative().clone(),
        cols,
        model.training_paths().to_vec(),
        window,
        model.aggregator(),
        model.threshold_mode(),
    )?;
    let scores = exec.map(rebuilt.training_paths(), |p| score_path(p, &rebuilt).0);
    rebuilt.set_score_threshold(scores.iter().copied().fold(f64::INFINITY, f64::min));
    rebuilt.set_training_scores(scores);
    rebuilt.set_baseline_threshold(model.baseline_threshold());
    Ok(rebuilt)
}

/// Normalized path-count grid plus a single-behaviour diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub pattern_id: String,
    pub rows: usize,
    pub cols: usize,
    /// `count_paths` per cell divided by the largest count, row-major.
    pub grid: Vec<Vec<f64>>,
    /// Share of all path mass lying within `window` cells of the (scaled)
    /// main diagonal. Near 1 for data matching the representative.
    pub diagonal_mass: f64,
}

pub fn validate_model_visual(model: &NormalModel) -> Heatmap {
    let (rows, cols) = model.dims();
    let matrix = model.matrix();
    let counts: Vec<Vec<u32>> = (0..rows)
        .map(|r| (0..cols).map(|c| matrix.total_at(r, c)).collect())
        .collect();
    let max = counts.iter().flatten().copied().max().unwrap_or(0);
    let grid = counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| {
                    if max == 0 {
                        0.0
                    } else {
                        f64::from(c) / f64::from(max)
                    }
                })
                .collect()
        })
        .collect();

    let slope = if rows > 1 {
        (cols.saturating_sub(1)) as f64 / (rows - 1) as f64
    } else {
        0.0
    };
    let half_width = model.window() as f64;
    let (mut inside, mut total) = (0u64, 0u64);
    for (r, row) in counts.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            total += u64::from(count);
            if (c as f64 - r as f64 * slope).abs() <= half_width {
                inside += u64::from(count);
            }
        }
    }
    let diagonal_mass = if total == 0 {
        0.0
    } else {
        inside as f64 / total as f64
    };
    Heatmap {
        pattern_id: model.pattern_id().to_string(),
        rows,
        cols,
        grid,
        diagonal_mass,
    }
}
