//! Two-part store: a tabular index of finished games plus an object store of
//! full session logs, comparison outcomes and collected records.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use builderkit_core::dataset::Record;
use builderkit_core::metrics::GameOutcome;
use builderkit_protocol::SessionLog;
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("storage io at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt entry in {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
}

/// One row per finished session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IndexRow {
    pub session_id: String,
    pub task_id: String,
    pub completion_code: String,
    pub instructions: Vec<String>,
    pub questions: Vec<String>,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hit_id: Option<String>,
}

pub trait Storage: Send + Sync {
    fn put_log(&self, log: &SessionLog, row: &IndexRow) -> Result<(), StorageError>;
    fn log_by_code(&self, completion_code: &str) -> Result<Option<SessionLog>, StorageError>;
    fn index(&self) -> Result<Vec<IndexRow>, StorageError>;
    fn put_outcome(&self, outcome: &GameOutcome) -> Result<(), StorageError>;
    fn outcomes(&self) -> Result<Vec<GameOutcome>, StorageError>;
    /// Stores a collected record and returns its id.
    fn put_record(&self, record: &Record) -> Result<usize, StorageError>;
    fn records(&self) -> Result<Vec<Record>, StorageError>;
}

#[derive(Default)]
pub struct MemoryStorage {
    inner: Mutex<MemoryInner>,
}

#[derive(Default)]
struct MemoryInner {
    logs: BTreeMap<String, SessionLog>,
    index: Vec<IndexRow>,
    outcomes: Vec<GameOutcome>,
    records: Vec<Record>,
}

impl Storage for MemoryStorage {
    fn put_log(&self, log: &SessionLog, row: &IndexRow) -> Result<(), StorageError> {
        let mut m = self.inner.lock();
        m.logs.insert(log.completion_code.clone(), log.clone());
        m.index.push(row.clone());
        Ok(())
    }

    fn log_by_code(&self, code: &str) -> Result<Option<SessionLog>, StorageError> {
        Ok(self.inner.lock().logs.get(code).cloned())
    }

    fn index(&self) -> Result<Vec<IndexRow>, StorageError> {
        Ok(self.inner.lock().index.clone())
    }

    fn put_outcome(&self, outcome: &GameOutcome) -> Result<(), StorageError> {
        self.inner.lock().outcomes.push(outcome.clone());
        Ok(())
    }

    fn outcomes(&self) -> Result<Vec<GameOutcome>, StorageError> {
        Ok(self.inner.lock().outcomes.clone())
    }

    fn put_record(&self, record: &Record) -> Result<usize, StorageError> {
        let mut m = self.inner.lock();
        m.records.push(record.clone());
        Ok(m.records.len() - 1)
    }

    fn records(&self) -> Result<Vec<Record>, StorageError> {
        Ok(self.inner.lock().records.clone())
    }
}

/// Layout under the root:
/// `logs/<sessionId>.json`, `index.jsonl`, `outcomes/<hitId>.json`, `records.jsonl`.
pub struct FsStorage {
    root: PathBuf,
    // Serializes appends and the record counter.
    lock: Mutex<()>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl FsStorage {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StorageError> {
        let root = root.into();
        for dir in [root.join("logs"), root.join("outcomes")] {
            fs::create_dir_all(&dir).map_err(io(&dir))?;
        }
        Ok(FsStorage {
            root,
            lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write to a sibling temp file and rename, so readers never see half a file.
    fn write_atomic(&self, path: &Path, bytes: &[u8]) -> Result<(), StorageError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes).map_err(io(&tmp))?;
        fs::rename(&tmp, path).map_err(io(path))
    }

    fn append_line(&self, path: &Path, line: &str) -> Result<(), StorageError> {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io(path))?;
        f.write_all(format!("{line}\n").as_bytes()).map_err(io(path))
    }

    fn read_lines<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Result<Vec<T>, StorageError> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(io(path)(e)),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| StorageError::Corrupt {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("stored values always serialize")
}

impl Storage for FsStorage {
    fn put_log(&self, log: &SessionLog, row: &IndexRow) -> Result<(), StorageError> {
        let _g = self.lock.lock();
        let path = self.root.join("logs").join(format!("{}.json", log.session_id));
        self.write_atomic(&path, to_json(log).as_bytes())?;
        self.append_line(&self.root.join("index.jsonl"), &to_json(row))
    }

    fn log_by_code(&self, code: &str) -> Result<Option<SessionLog>, StorageError> {
        let Some(row) = self.index()?.into_iter().find(|r| r.completion_code == code) else {
            return Ok(None);
        };
        let path = self.root.join("logs").join(format!("{}.json", row.session_id));
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| StorageError::Corrupt {
                path,
                reason: e.to_string(),
            })
    }

    fn index(&self) -> Result<Vec<IndexRow>, StorageError> {
        self.read_lines(&self.root.join("index.jsonl"))
    }

    fn put_outcome(&self, outcome: &GameOutcome) -> Result<(), StorageError> {
        let path = self.root.join("outcomes").join(format!("{}.json", outcome.hit_id));
        self.write_atomic(&path, to_json(outcome).as_bytes())
    }

    fn outcomes(&self) -> Result<Vec<GameOutcome>, StorageError> {
        read_outcome_dir(&self.root.join("outcomes"))
    }

    fn put_record(&self, record: &Record) -> Result<usize, StorageError> {
        let _g = self.lock.lock();
        let path = self.root.join("records.jsonl");
        let n = self.read_lines::<serde_json::Value>(&path)?.len();
        self.append_line(&path, &record.to_json().to_string())?;
        Ok(n)
    }

    fn records(&self) -> Result<Vec<Record>, StorageError> {
        let path = self.root.join("records.jsonl");
        self.read_lines::<serde_json::Value>(&path)?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                Record::from_json(i, v).map_err(|e| StorageError::Corrupt {
                    path: path.clone(),
                    reason: e.to_string(),
                })
            })
            .collect()
    }
}

/// Every `*.json` file in `dir` holding one outcome or an array of them,
/// sorted by file name.
pub fn read_outcome_dir(dir: &Path) -> Result<Vec<GameOutcome>, StorageError> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(dir)(e)),
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(&p).map_err(io(&p))?;
        let corrupt = |e: serde_json::Error| StorageError::Corrupt {
            path: p.clone(),
            reason: e.to_string(),
        };
        let v: serde_json::Value = serde_json::from_str(&text).map_err(corrupt)?;
        if v.is_array() {
            out.extend(serde_json::from_value::<Vec<GameOutcome>>(v).map_err(corrupt)?);
        } else {
            out.push(serde_json::from_value(v).map_err(corrupt)?);
        }
    }
    Ok(out)
}
