//! Workdir layout, manifest and lockfile.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::sha256_hex;
use crate::CliError;

pub const SUBDIRS: [&str; 5] = ["queries", "diagrams", "circuits", "checkpoints", "results"];
const MANIFEST: &str = "manifest.json";
const LOCK: &str = ".sql2circuits.lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Hash of the stage's config slice and input digests.
    pub fingerprint: String,
    /// Digests of the files the stage read, relative to the workdir.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// Unix time of the last run that did work.
    pub completed_at: u64,
    /// `ran` or `no-op`.
    pub last_run: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub stages: BTreeMap<String, StageRecord>,
}

pub struct Workdir {
    pub root: PathBuf,
    _lock: LockGuard,
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

impl Workdir {
    /// Creates the layout if needed and takes the lock.
    pub fn open(root: &Path) -> Result<Workdir, CliError> {
        for d in SUBDIRS {
            fs::create_dir_all(root.join(d)).map_err(|e| data(format!("cannot create {}: {e}", root.join(d).display())))?;
        }
        let lock = root.join(LOCK);
        OpenOptions::new().write(true).create_new(true).open(&lock).map_err(|e| {
            data(format!(
                "cannot lock {} ({e}); another run may be active, otherwise delete the lockfile",
                root.display()
            ))
        })?;
        Ok(Workdir {
            root: root.to_path_buf(),
            _lock: LockGuard(lock),
        })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn manifest(&self) -> Result<Option<Manifest>, CliError> {
        let p = self.path(MANIFEST);
        if !p.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&p).map_err(data)?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| data(format!("{}: {e}", p.display())))
    }

    pub fn save_manifest(&self, m: &Manifest) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
        self.write(MANIFEST, text.as_bytes()).map(|_| ())
    }

    pub fn read(&self, rel: &str) -> Result<Vec<u8>, CliError> {
        fs::read(self.path(rel)).map_err(|e| data(format!("cannot read {}: {e}", self.path(rel).display())))
    }

    /// Writes `bytes` unless the file already holds exactly them. Returns
    /// whether the file was written.
    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<bool, CliError> {
        let p = self.path(rel);
        if fs::read(&p).is_ok_and(|old| old == bytes) {
            return Ok(false);
        }
        fs::write(&p, bytes).map_err(|e| data(format!("cannot write {}: {e}", p.display())))?;
        Ok(true)
    }

    pub fn digest(&self, rel: &str) -> Option<String> {
        fs::read(self.path(rel)).ok().map(|b| sha256_hex(&b))
    }

    /// Whether every recorded file still has its recorded digest.
    pub fn intact(&self, files: &BTreeMap<String, String>) -> bool {
        files.iter().all(|(rel, d)| self.digest(rel).as_deref() == Some(d.as_str()))
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let w = Workdir::open(dir.path()).unwrap();
        assert!(matches!(Workdir::open(dir.path()), Err(CliError::Data(_))));
        drop(w);
        Workdir::open(dir.path()).unwrap();
    }

    #[test]
    fn unchanged_content_is_not_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let w = Workdir::open(dir.path()).unwrap();
        assert!(w.write("results/x.csv", b"a\n").unwrap());
        assert!(!w.write("results/x.csv", b"a\n").unwrap());
        assert!(w.write("results/x.csv", b"b\n").unwrap());
        let files: BTreeMap<String, String> = [("results/x.csv".to_string(), sha256_hex(b"b\n"))].into();
        assert!(w.intact(&files));
    }
}
