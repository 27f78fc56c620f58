//! Flat `key = value` run configuration. Every lookup records the value in
//! effect so the manifest can echo it.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use lcglue_core::data::FilterSpec;
use lcglue_core::model::{ModelConfig, TrainingSchedule};

/// Keys owned by the driver itself; model, schedule and filter keys are
/// accepted through their own setters.
const DRIVER_KEYS: &[&str] = &[
    "seed",
    "out",
    "compounds",
    "ingest_strict",
    "train_set",
    "ligase_fasta",
    "ligase_embeddings",
    "conformers",
    "train_ligases",
    "include_low",
    "checkpoint",
    "resume",
    "generate_ligases",
    "samples_per_ligase",
    "samples",
    "training_set",
    "projection_method",
    "perplexity",
    "tsne_iterations",
    "projection_training_max",
    "projection_generated_max",
    "fingerprint_radius",
    "fingerprint_bits",
    "scores",
    "ligases",
];

#[derive(Debug)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
    /// Relative input paths in the file resolve against this directory.
    base: PathBuf,
    effective: RefCell<BTreeMap<String, String>>,
}

fn owned_elsewhere(key: &str, value: &str) -> bool {
    let mut m = ModelConfig::default();
    let mut s = TrainingSchedule::default();
    let mut f = FilterSpec::default();
    // a bad value still proves ownership; it is reported when the owner parses it
    m.set(key, value).unwrap_or(true) || s.set(key, value).unwrap_or(true) || f.set(key, value).unwrap_or(true)
}

impl RunConfig {
    pub fn empty() -> RunConfig {
        RunConfig { values: BTreeMap::new(), base: PathBuf::from("."), effective: RefCell::default() }
    }

    pub fn parse(text: &str, base: &Path) -> Result<RunConfig> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !DRIVER_KEYS.contains(&k) && !owned_elsewhere(k, v) {
                bail!("config line {}: unknown key `{k}`", i + 1);
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                bail!("config line {}: `{k}` set twice", i + 1);
            }
        }
        Ok(RunConfig { values, base: base.to_path_buf(), effective: RefCell::default() })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RunConfig::parse(&text, &base)
    }

    /// Command-line overrides win over the file.
    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    fn note(&self, key: &str, value: &str) {
        self.effective.borrow_mut().insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr + ToString>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = match self.raw(key) {
            Some(s) => s.parse::<T>().map_err(|e| anyhow!("config `{key}`: {e}"))?,
            None => default,
        };
        self.note(key, &v.to_string());
        Ok(v)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.raw(key)?;
        self.note(key, raw);
        let p = PathBuf::from(raw);
        Some(if p.is_absolute() { p } else { self.base.join(p) })
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        let p = self.path(key).ok_or_else(|| anyhow!("config key `{key}` is required"))?;
        if !p.exists() {
            bail!("`{key}` points at {}, which does not exist", p.display());
        }
        Ok(p)
    }

    /// Comma-separated list; empty when unset.
    pub fn list(&self, key: &str) -> Vec<String> {
        let items: Vec<String> = self
            .raw(key)
            .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect())
            .unwrap_or_default();
        self.note(key, &items.join(","));
        items
    }

    pub fn model(&self) -> Result<ModelConfig> {
        let mut m = ModelConfig::default();
        for (k, v) in &self.values {
            m.set(k, v)?;
        }
        m.validate()?;
        for (k, v) in m.entries() {
            self.note(k, &v);
        }
        Ok(m)
    }

    pub fn schedule(&self) -> Result<TrainingSchedule> {
        let mut s = TrainingSchedule::default();
        for (k, v) in &self.values {
            s.set(k, v)?;
        }
        for (k, v) in s.entries() {
            self.note(k, &v);
        }
        Ok(s)
    }

    pub fn filter(&self) -> Result<FilterSpec> {
        let mut f = FilterSpec::default();
        for (k, v) in &self.values {
            f.set(k, v)?;
        }
        f.validate()?;
        for (k, v) in f.entries() {
            self.note(k, &v);
        }
        Ok(f)
    }

    pub fn effective(&self) -> BTreeMap<String, String> {
        self.effective.borrow().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks() {
        let c = RunConfig::parse("# run\nseed = 7 # trailing\nhidden = 8\nlr = 0.01\nmw_max = 600\n", Path::new("/tmp")).unwrap();
        assert_eq!(c.get("seed", 0u64).unwrap(), 7);
        assert_eq!(c.model().unwrap().hidden, 8);
        assert_eq!(c.schedule().unwrap().lr, 0.01);
        assert_eq!(c.filter().unwrap().mw.hi, 600.0);
        assert_eq!(c.effective().get("seed").map(String::as_str), Some("7"));
        assert_eq!(c.get("samples_per_ligase", 5usize).unwrap(), 5);
        assert_eq!(c.effective().get("samples_per_ligase").map(String::as_str), Some("5"));
    }

    #[test]
    fn rejects_unknown_and_repeated_keys() {
        assert!(RunConfig::parse("colour = red\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2\n", Path::new(".")).is_err());
        assert!(RunConfig::parse("no equals sign\n", Path::new(".")).is_err());
    }
}
