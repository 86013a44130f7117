use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use warpwatch::{score_set, Band, Classification, DetectionOutcome, ModelSet, TimeSeries};

use crate::error::ApiError;
use crate::feedback::{apply, replay, FeedbackEvent, Verdict};
use crate::store::DataDir;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub band: Band,
    /// Pending items older than this are expired. `None` keeps them forever.
    pub ttl: Option<Duration>,
    pub data_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            band: Band {
                low: 0.25,
                high: 0.30,
            },
            ttl: None,
            data_dir: None,
        }
    }
}

impl ServiceConfig {
    /// Reads `WARPWATCH_DATA_DIR`, `WARPWATCH_BAND_LOW`, `WARPWATCH_BAND_HIGH`
    /// and `WARPWATCH_TTL_SECS` on top of the defaults.
    pub fn from_env() -> Result<Self, String> {
        let mut config = ServiceConfig::default();
        let var = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        let float = |name: &str, raw: String| {
            raw.parse::<f64>()
                .map_err(|e| format!("{name}={raw:?}: {e}"))
        };
        if let Some(dir) = var("WARPWATCH_DATA_DIR") {
            config.data_dir = Some(dir.into());
        }
        let low = match var("WARPWATCH_BAND_LOW") {
            Some(raw) => float("WARPWATCH_BAND_LOW", raw)?,
            None => config.band.low,
        };
        let high = match var("WARPWATCH_BAND_HIGH") {
            Some(raw) => float("WARPWATCH_BAND_HIGH", raw)?,
            None => config.band.high,
        };
        config.band = Band::new(low, high).map_err(|e| e.to_string())?;
        if let Some(raw) = var("WARPWATCH_TTL_SECS") {
            let secs = float("WARPWATCH_TTL_SECS", raw)?;
            config.ttl = Some(Duration::try_from_secs_f64(secs).map_err(|e| e.to_string())?);
        }
        Ok(config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Pending,
    LabeledNormal,
    LabeledAnomalous,
    Expired,
}

impl ItemStatus {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pending" => ItemStatus::Pending,
            "labeled_normal" => ItemStatus::LabeledNormal,
            "labeled_anomalous" => ItemStatus::LabeledAnomalous,
            "expired" => ItemStatus::Expired,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReviewItem {
    pub item_id: u64,
    pub series: TimeSeries,
    pub outcome: DetectionOutcome,
    /// Model version the outcome was computed against.
    pub model_version: u64,
    /// Milliseconds since the Unix epoch.
    pub queued_at: u64,
    pub status: ItemStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRecord {
    pub series: TimeSeries,
    pub outcome: DetectionOutcome,
    pub model_version: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item_id: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub version: u64,
    pub models: Arc<ModelSet>,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub series_id: String,
    pub outcome: DetectionOutcome,
    pub model_version: u64,
    pub item_id: Option<u64>,
}

/// Everything the single writer owns. Lock order: `book` before `snapshot`.
#[derive(Debug, Default)]
struct Book {
    items: BTreeMap<u64, ReviewItem>,
    next_item: u64,
    series: HashMap<String, SeriesRecord>,
    next_series: u64,
    base: Option<Arc<ModelSet>>,
    log: Vec<FeedbackEvent>,
}

#[derive(Debug)]
struct Inner {
    config: ServiceConfig,
    store: Option<DataDir>,
    snapshot: RwLock<Option<Snapshot>>,
    book: Mutex<Book>,
}

/// Cheap to clone; all clones share one service.
#[derive(Debug, Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl AppState {
    /// Opens the data directory, if configured, and restores the stored
    /// snapshot by replaying its feedback log.
    pub fn new(config: ServiceConfig) -> Result<Self, warpwatch::Error> {
        let store = config.data_dir.as_ref().map(DataDir::open).transpose()?;
        let state = AppState {
            inner: Arc::new(Inner {
                config,
                store,
                snapshot: RwLock::new(None),
                book: Mutex::new(Book {
                    next_item: 1,
                    next_series: 1,
                    ..Book::default()
                }),
            }),
        };
        if let Some((base, events)) = state
            .inner
            .store
            .as_ref()
            .map(DataDir::load)
            .transpose()?
            .flatten()
        {
            let live = replay(&base, &events)?;
            let version = events.last().map_or(1, |e| e.model_version);
            let mut book = state.book();
            book.base = Some(Arc::new(base));
            book.log = events;
            *state.inner.snapshot.write().expect("snapshot lock") = Some(Snapshot {
                version,
                models: Arc::new(live),
            });
        }
        Ok(state)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    fn book(&self) -> MutexGuard<'_, Book> {
        self.inner.book.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn snapshot(&self) -> Option<Snapshot> {
        self.inner
            .snapshot
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }

    fn publish(&self, snapshot: Snapshot) {
        *self
            .inner
            .snapshot
            .write()
            .unwrap_or_else(|p| p.into_inner()) = Some(snapshot);
    }

    /// Replaces the model. Pending items refer to the old lattice, so they expire.
    pub fn load_model(&self, models: ModelSet) -> Result<u64, ApiError> {
        let mut book = self.book();
        if let Some(store) = &self.inner.store {
            store
                .reset(&models)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        let version = self.snapshot().map_or(1, |s| s.version + 1);
        for item in book.items.values_mut() {
            if item.status == ItemStatus::Pending {
                item.status = ItemStatus::Expired;
            }
        }
        let models = Arc::new(models);
        book.base = Some(models.clone());
        book.log.clear();
        self.publish(Snapshot { version, models });
        tracing::info!(version, "model loaded");
        Ok(version)
    }

    pub fn detect(&self, series: TimeSeries) -> Result<Detection, ApiError> {
        let snapshot = self
            .snapshot()
            .ok_or_else(|| ApiError::Conflict("no model loaded".into()))?;
        let outcome = score_set(&series, &snapshot.models, &self.inner.config.band)?;

        let mut book = self.book();
        let series_id = if series.id.is_empty() {
            let id = format!("s{}", book.next_series);
            book.next_series += 1;
            id
        } else {
            series.id.clone()
        };
        let series = TimeSeries {
            id: series_id.clone(),
            ..series
        };
        let item_id = (outcome.classification == Classification::Uncertain).then(|| {
            let id = book.next_item;
            book.next_item += 1;
            book.items.insert(
                id,
                ReviewItem {
                    item_id: id,
                    series: series.clone(),
                    outcome: outcome.clone(),
                    model_version: snapshot.version,
                    queued_at: now_ms(),
                    status: ItemStatus::Pending,
                },
            );
            id
        });
        book.series.insert(
            series_id.clone(),
            SeriesRecord {
                series,
                outcome: outcome.clone(),
                model_version: snapshot.version,
                item_id,
            },
        );
        Ok(Detection {
            series_id,
            outcome,
            model_version: snapshot.version,
            item_id,
        })
    }

    fn expire(&self, book: &mut Book) {
        let Some(ttl) = self.inner.config.ttl else {
            return;
        };
        let now = now_ms();
        let ttl_ms = ttl.as_millis() as u64;
        for item in book.items.values_mut() {
            if item.status == ItemStatus::Pending && now.saturating_sub(item.queued_at) >= ttl_ms {
                item.status = ItemStatus::Expired;
            }
        }
    }

    /// Items with the given status (all items when `None`) in queue order,
    /// plus the total before paging.
    pub fn queue(
        &self,
        status: Option<ItemStatus>,
        offset: usize,
        limit: usize,
    ) -> (usize, Vec<ReviewItem>) {
        let mut book = self.book();
        self.expire(&mut book);
        let matching: Vec<&ReviewItem> = book
            .items
            .values()
            .filter(|i| status.is_none_or(|s| i.status == s))
            .collect();
        let total = matching.len();
        let page = matching
            .into_iter()
            .skip(offset)
            .take(limit)
            .cloned()
            .collect();
        (total, page)
    }

    /// Applies an expert verdict as a new snapshot version. Requests are
    /// serialized by the book lock; readers keep the previous snapshot until
    /// the new one is published.
    pub fn feedback(&self, item_id: u64, label: Verdict) -> Result<u64, ApiError> {
        let mut book = self.book();
        self.expire(&mut book);
        let item = book
            .items
            .get(&item_id)
            .ok_or_else(|| ApiError::NotFound(format!("unknown item {item_id}")))?;
        match item.status {
            ItemStatus::Pending => {}
            ItemStatus::Expired => {
                return Err(ApiError::Conflict(format!("item {item_id} expired")))
            }
            _ => {
                return Err(ApiError::Conflict(format!(
                    "item {item_id} already labeled"
                )))
            }
        }
        let path = item
            .outcome
            .path
            .clone()
            .ok_or_else(|| ApiError::Internal(format!("item {item_id} has no path")))?;
        let pattern_index = item.outcome.pattern_index;
        let current = self
            .snapshot()
            .ok_or_else(|| ApiError::Conflict("no model loaded".into()))?;

        let event = FeedbackEvent {
            seq: book.log.len() as u64 + 1,
            item_id,
            pattern_index,
            label,
            path,
            model_version: current.version + 1,
        };
        let mut next = (*current.models).clone();
        apply(&mut next, &event)?;
        if let Some(store) = &self.inner.store {
            store
                .append(&event)
                .map_err(|e| ApiError::Internal(e.to_string()))?;
        }
        book.log.push(event);
        if let Some(item) = book.items.get_mut(&item_id) {
            item.status = match label {
                Verdict::Normal => ItemStatus::LabeledNormal,
                Verdict::Anomalous => ItemStatus::LabeledAnomalous,
            };
        }
        let version = current.version + 1;
        self.publish(Snapshot {
            version,
            models: Arc::new(next),
        });
        tracing::info!(item_id, %label, version, "feedback applied");
        Ok(version)
    }

    pub fn series(&self, id: &str) -> Option<SeriesRecord> {
        self.book().series.get(id).cloned()
    }

    /// The snapshot the feedback log starts from, and the log itself.
    pub fn history(&self) -> Option<(Arc<ModelSet>, Vec<FeedbackEvent>)> {
        let book = self.book();
        book.base.clone().map(|b| (b, book.log.clone()))
    }
}
