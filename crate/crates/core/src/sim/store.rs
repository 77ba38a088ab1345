use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, PoisonError};

use super::trace::DerivationalTrace;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("invalid trace id `{0}`")]
    InvalidId(String),
    #[error("trace store I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("stored trace {path} is corrupt: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Persistence for derivational traces, keyed by trace id.
pub trait TraceStore: Send + Sync {
    fn put(&self, trace: &DerivationalTrace) -> Result<(), StoreError>;
    fn get(&self, trace_id: &str) -> Result<Option<DerivationalTrace>, StoreError>;
}

/// Trace ids are short lowercase hex or uuid-like strings; anything else is rejected
/// so ids can never escape the store directory.
pub fn valid_trace_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// One pretty-printed JSON file per trace under a directory.
#[derive(Debug)]
pub struct FileTraceStore {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl FileTraceStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
        Ok(FileTraceStore { dir, lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_trace_id(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

impl TraceStore for FileTraceStore {
    fn put(&self, trace: &DerivationalTrace) -> Result<(), StoreError> {
        let path = self.path_for(&trace.trace_id)?;
        let mut body = serde_json::to_string_pretty(trace).expect("traces always serialize");
        body.push('\n');
        let _guard = self.lock.lock().unwrap_or_else(PoisonError::into_inner);
        write_atomic(&path, body.as_bytes()).map_err(|source| StoreError::Io { path, source })
    }

    fn get(&self, trace_id: &str) -> Result<Option<DerivationalTrace>, StoreError> {
        let path = self.path_for(trace_id)?;
        let _guard = self.lock.lock().unwrap_or_else(PoisonError::into_inner);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        serde_json::from_str(&text).map(Some).map_err(|source| StoreError::Corrupt { path, source })
    }
}

#[derive(Debug, Default)]
pub struct MemoryTraceStore {
    traces: Mutex<HashMap<String, DerivationalTrace>>,
}

impl MemoryTraceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.traces.lock().unwrap_or_else(PoisonError::into_inner).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TraceStore for MemoryTraceStore {
    fn put(&self, trace: &DerivationalTrace) -> Result<(), StoreError> {
        if !valid_trace_id(&trace.trace_id) {
            return Err(StoreError::InvalidId(trace.trace_id.clone()));
        }
        self.traces.lock().unwrap_or_else(PoisonError::into_inner).insert(trace.trace_id.clone(), trace.clone());
        Ok(())
    }

    fn get(&self, trace_id: &str) -> Result<Option<DerivationalTrace>, StoreError> {
        Ok(self.traces.lock().unwrap_or_else(PoisonError::into_inner).get(trace_id).cloned())
    }
}
