//! Artifact bookkeeping. Every file a command writes goes through [`Output`]
//! so the manifest can list it with its SHA-256.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    artifacts: Vec<(String, String, usize)>,
    notes: Vec<String>,
}

impl Output {
    pub fn create(dir: &Path, command: &'static str) -> Result<Output> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output { dir: dir.to_path_buf(), command, artifacts: Vec::new(), notes: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let bytes = bytes.as_ref();
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let digest = format!("{:x}", Sha256::digest(bytes));
        self.artifacts.retain(|(n, _, _)| n != name);
        self.artifacts.push((name.to_string(), digest, bytes.len()));
        Ok(path)
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// `MANIFEST.<command>`: status, effective configuration, then one
    /// `sha256  bytes  name` line per artifact in write order.
    pub fn finish(mut self, cfg: &RunConfig, status: &str) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "# lcglue {}", self.command);
        let _ = writeln!(text, "status = {status}");
        let _ = writeln!(text, "\n[config]");
        for (k, v) in cfg.effective() {
            let _ = writeln!(text, "{k} = {v}");
        }
        if !self.notes.is_empty() {
            let _ = writeln!(text, "\n[notes]");
            for n in &self.notes {
                let _ = writeln!(text, "{n}");
            }
        }
        let _ = writeln!(text, "\n[artifacts]");
        for (name, digest, len) in &self.artifacts {
            let _ = writeln!(text, "{digest}  {len}  {name}");
        }
        let name = format!("MANIFEST.{}", self.command);
        std::fs::write(self.dir.join(&name), text).with_context(|| format!("writing {name}"))?;
        self.artifacts.clear();
        Ok(())
    }
}
