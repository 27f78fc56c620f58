pub mod eval;
pub mod generate;
pub mod ingest;
pub mod report;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use lcglue_core::data::{attach_embeddings, ingest_compounds_file, parse_ligase_fasta};
use lcglue_core::model::LigaseContext;

use crate::config::RunConfig;
use crate::{fail, EXIT_SCHEMA, EXIT_UNKNOWN_LIGASE};

/// Every input-shape problem maps to the schema exit code.
pub fn schema(e: impl std::fmt::Display) -> anyhow::Error {
    fail(EXIT_SCHEMA, e)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Ligase records from `ligase_fasta`, with `ligase_embeddings` vectors
/// attached when configured.
pub fn load_ligases(cfg: &RunConfig) -> Result<Vec<LigaseContext>> {
    let path = cfg.require_path("ligase_fasta").map_err(schema)?;
    let mut contexts = parse_ligase_fasta(&read_text(&path)?).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    if let Some(p) = cfg.path("ligase_embeddings") {
        attach_embeddings(&mut contexts, &read_text(&p)?).map_err(|e| schema(format!("{}: {e}", p.display())))?;
    }
    Ok(contexts)
}

/// The contexts named in `key`, in that order; all of them when unset.
pub fn select_ligases(cfg: &RunConfig, key: &str, contexts: &[LigaseContext]) -> Result<Vec<LigaseContext>> {
    let ids = cfg.list(key);
    if ids.is_empty() {
        return Ok(contexts.to_vec());
    }
    ids.iter()
        .map(|id| {
            contexts
                .iter()
                .find(|c| &c.id == id)
                .cloned()
                .ok_or_else(|| fail(EXIT_UNKNOWN_LIGASE, format!("`{key}` names unknown ligase `{id}`")))
        })
        .collect()
}

/// `(smiles, name)` from a `.smi` file: one molecule per line, name
/// optional, `#` comments.
pub fn read_smi(path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in read_text(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let smiles = parts.next().expect("non-empty line").to_string();
        let name = parts.next().map_or_else(|| format!("mol{}", i + 1), str::to_string);
        out.push((smiles, name));
    }
    Ok(out)
}

/// `(smiles, name)` from either a `.smi` file or a compound CSV.
pub fn read_molecule_list(path: &Path) -> Result<Vec<(String, String)>> {
    if path.extension().is_some_and(|e| e == "smi") {
        return read_smi(path);
    }
    let res = ingest_compounds_file(path).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    Ok(res.records.into_iter().map(|r| (r.smiles, r.id)).collect())
}

/// CSV text from records built in memory.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))
}
