//! Data directory layout: `model.json` holds the snapshot the feedback log
//! starts from, `feedback.log` holds one JSON event per line.

use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use warpwatch::model::{deserialize_model_set, serialize_model_set};
use warpwatch::{ModelSet, Result};

use crate::feedback::{parse_log, FeedbackEvent};

pub const MODEL_FILE: &str = "model.json";
pub const LOG_FILE: &str = "feedback.log";

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(DataDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn model_path(&self) -> PathBuf {
        self.root.join(MODEL_FILE)
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join(LOG_FILE)
    }

    /// The stored base snapshot and its log, or `None` when no model was saved.
    pub fn load(&self) -> Result<Option<(ModelSet, Vec<FeedbackEvent>)>> {
        let text = match fs::read_to_string(self.model_path()) {
            Ok(t) => t,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let base = deserialize_model_set(&text)?;
        let events = match fs::read_to_string(self.log_path()) {
            Ok(t) => parse_log(&t)?,
            Err(e) if e.kind() == ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok(Some((base, events)))
    }

    /// Replaces the base snapshot and starts an empty log.
    pub fn reset(&self, base: &ModelSet) -> Result<()> {
        let tmp = self.root.join(format!("{MODEL_FILE}.tmp"));
        fs::write(&tmp, serialize_model_set(base))?;
        File::create(self.log_path())?.sync_all()?;
        fs::rename(&tmp, self.model_path())?;
        Ok(())
    }

    pub fn append(&self, event: &FeedbackEvent) -> Result<()> {
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.log_path())?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }
}
