//! Output staging: every artifact of a command is rendered in memory first
//! and only then written, each through a temporary file renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use gem_core::table::Table;
use serde::Serialize;

use crate::error::{CliError, Result};

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_table(&mut self, name: impl Into<String>, table: &Table) {
        self.add(name, table.to_bytes());
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    /// Writes all staged files into `dir`, creating it if needed.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>> {
        let io = |path: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let target = dir.join(&name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(dir, e))?;
            tmp.write_all(&bytes)
                .and_then(|_| tmp.as_file().sync_all())
                .map_err(|e| io(&target, e))?;
            tmp.persist(&target).map_err(|e| io(&target, e.error))?;
            written.push(target);
        }
        Ok(written)
    }
}
