use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qhc_core::{Error, Result};
use serde::Serialize;
use tempfile::NamedTempFile;

/// Output files held in memory until every one of them is ready.
#[derive(Debug, Default)]
pub struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn text(&mut self, path: impl Into<PathBuf>, contents: String) {
        self.files.push((path.into(), contents.into_bytes()));
    }

    pub fn json(&mut self, path: impl Into<PathBuf>, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(format!("serializing JSON: {e}")))?;
        text.push('\n');
        self.text(path, text);
        Ok(())
    }

    /// Writes each file to a temporary sibling and renames it into place.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::with_capacity(self.files.len());
        for (path, bytes) in self.files {
            write_atomic(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}
