//! Staged outputs: everything a command produces is collected in memory and
//! only written once the command has succeeded. Each file is written to a
//! temporary sibling and renamed into place; a lock file keeps concurrent
//! runs out of the same directory.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::Serialize;
use serde_json::Value;

pub const LOCK_FILE: &str = ".idiolect.lock";

/// Rerun information stored next to every output file as `<file>.meta.json`.
#[derive(Debug, Clone, Serialize)]
pub struct CommandMeta {
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, Value>,
}

impl CommandMeta {
    pub fn new(command: &str, seed: u64) -> CommandMeta {
        CommandMeta {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            inputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("metadata values serialize");
        self.inputs.insert(key.to_string(), value);
    }
}

pub struct Staged {
    files: BTreeMap<PathBuf, Vec<u8>>,
    meta: CommandMeta,
}

impl Staged {
    pub fn new(meta: CommandMeta) -> Staged {
        Staged {
            files: BTreeMap::new(),
            meta,
        }
    }

    /// Stages `bytes` at `rel` plus its metadata companion.
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        let rel = rel.into();
        self.files.insert(rel, bytes.into());
    }

    pub fn add_json(&mut self, rel: impl Into<PathBuf>, value: &impl Serialize) {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
        text.push('\n');
        self.add(rel, text);
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    /// Writes every staged file under `out`. Returns the written paths.
    pub fn commit(self, out: &Path) -> anyhow::Result<Vec<PathBuf>> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let _lock = Lock::acquire(out)?;
        let mut meta = serde_json::to_string_pretty(&self.meta).expect("metadata serializes");
        meta.push('\n');

        let mut written = Vec::new();
        for (rel, bytes) in &self.files {
            let path = out.join(rel);
            write_atomic(&path, bytes)?;
            let mut companion = path.clone().into_os_string();
            companion.push(".meta.json");
            write_atomic(Path::new(&companion), meta.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("staging {}", path.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

struct Lock(PathBuf);

impl Lock {
    fn acquire(out: &Path) -> anyhow::Result<Lock> {
        let path = out.join(LOCK_FILE);
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .with_context(|| {
                format!(
                    "{} is locked by another run (remove {} if stale)",
                    out.display(),
                    path.display()
                )
            })?;
        Ok(Lock(path))
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}
