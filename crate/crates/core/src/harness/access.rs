use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::data::{load_csv, Dataset};
use crate::error::{CraftError, Result};
use crate::regressor::{load_checkpoint, Checkpoint};

/// Records every file the harness opens for reading. Clones share the log.
#[derive(Debug, Clone, Default)]
pub struct FileAccessLog(Arc<Mutex<Vec<PathBuf>>>);

impl FileAccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&self, path: &Path) {
        self.0.lock().expect("access log poisoned").push(path.to_path_buf());
    }

    pub fn paths(&self) -> Vec<PathBuf> {
        self.0.lock().expect("access log poisoned").clone()
    }

    pub fn contains(&self, path: &Path) -> bool {
        let target = canonical(path);
        self.paths().iter().any(|p| canonical(p) == target)
    }

    pub fn load_csv(&self, path: &Path) -> Result<Dataset> {
        self.record(path);
        load_csv(path)
    }

    pub fn load_checkpoint(&self, path: &Path) -> Result<Checkpoint> {
        self.record(path);
        load_checkpoint(path)
    }

    pub fn read_to_string(&self, path: &Path) -> Result<String> {
        self.record(path);
        std::fs::read_to_string(path).map_err(|e| CraftError::io(path, e))
    }
}

fn canonical(p: &Path) -> PathBuf {
    p.canonicalize().unwrap_or_else(|_| p.to_path_buf())
}
