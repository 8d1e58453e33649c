//! Output bookkeeping: every file is written atomically, and a command that
//! fails part-way removes the files it already produced.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lexext_core::fsutil::write_atomic;

#[derive(Debug, Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
        write_atomic(path, contents.as_ref())
            .with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    /// Registers a file written by other means so it is cleaned up on failure.
    pub fn track(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in self.written.iter().rev() {
            if std::fs::remove_file(p).is_ok() {
                log::warn!("removed partial output {}", p.display());
            }
        }
    }
}

/// Fails unless `path` is an existing regular file.
pub fn input_file(path: &Path) -> Result<()> {
    anyhow::ensure!(
        path.is_file(),
        "input file {} does not exist",
        path.display()
    );
    Ok(())
}

pub fn input_dir(path: &Path) -> Result<()> {
    anyhow::ensure!(
        path.is_dir(),
        "input directory {} does not exist",
        path.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_outputs_are_removed() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        {
            let mut o = Outputs::new();
            o.write(&a, "x").unwrap();
            assert!(a.exists());
        }
        assert!(!a.exists());
        let mut o = Outputs::new();
        o.write(&a, "x").unwrap();
        o.commit();
        assert!(a.exists());
    }
}
