use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CompoundRecord, DataError, Library};

pub const MANDATORY_COLUMNS: [&str; 9] =
    ["id", "smiles", "library", "MW", "logPo_w", "logS", "logHERG", "metab", "ro5_violations"];
const DOCK_PREFIX: &str = "dock_";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestResult {
    pub records: Vec<CompoundRecord>,
    pub rejections: Vec<Rejection>,
    /// Ligase ids taken from the `dock_*` header columns, in header order.
    pub ligases: Vec<String>,
}

fn parse_float(cell: &str, col: &str) -> Result<Option<f64>, String> {
    if cell.trim().is_empty() {
        return Ok(None);
    }
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        Ok(v) => Err(format!("{col} is not finite ({v})")),
        Err(_) => Err(format!("{col} is not a number: {cell:?}")),
    }
}

fn parse_count(cell: &str, col: &str) -> Result<Option<u32>, String> {
    match parse_float(cell, col)? {
        None => Ok(None),
        Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(Some(v as u32)),
        Some(v) => Err(format!("{col} must be a non-negative integer, got {v}")),
    }
}

/// Reads a compound CSV. Malformed rows and repeated ids are logged with
/// their line numbers; the first occurrence of an id wins.
pub fn ingest_compounds(reader: impl Read) -> Result<IngestResult, DataError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::Headers).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(DataError::Empty("no header row".into()));
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<String> =
        MANDATORY_COLUMNS.iter().filter(|c| col(c).is_none()).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(DataError::MissingColumns(missing));
    }
    let idx: Vec<usize> = MANDATORY_COLUMNS.iter().map(|c| col(c).expect("checked")).collect();
    let docks: Vec<(String, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| h.strip_prefix(DOCK_PREFIX).map(|l| (l.to_string(), i)))
        .collect();

    let mut out = IngestResult { ligases: docks.iter().map(|(l, _)| l.clone()).collect(), ..Default::default() };
    let mut seen = HashSet::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.rejections.push(Rejection { line, id: None, reason: e.to_string() });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line() as usize);
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        let cell = |i: usize| row.get(i).unwrap_or("");
        let id = cell(idx[0]).trim().to_string();
        let reject = |reason: String| Rejection { line, id: (!id.is_empty()).then(|| id.clone()), reason };
        if row.len() < headers.len() {
            out.rejections.push(reject(format!("expected {} fields, found {}", headers.len(), row.len())));
            continue;
        }
        if id.is_empty() {
            out.rejections.push(reject("empty id".into()));
            continue;
        }
        let smiles = cell(idx[1]).trim().to_string();
        if smiles.is_empty() {
            out.rejections.push(reject("empty smiles".into()));
            continue;
        }
        let parsed = (|| -> Result<CompoundRecord, String> {
            let mut dock = BTreeMap::new();
            for (lig, i) in &docks {
                if let Some(v) = parse_float(cell(*i), &format!("{DOCK_PREFIX}{lig}"))? {
                    dock.insert(lig.clone(), v);
                }
            }
            Ok(CompoundRecord {
                id: id.clone(),
                smiles: smiles.clone(),
                library: Library::parse(cell(idx[2])),
                mw: parse_float(cell(idx[3]), "MW")?,
                logp: parse_float(cell(idx[4]), "logPo_w")?,
                logs: parse_float(cell(idx[5]), "logS")?,
                logherg: parse_float(cell(idx[6]), "logHERG")?,
                metab: parse_count(cell(idx[7]), "metab")?,
                ro5_violations: parse_count(cell(idx[8]), "ro5_violations")?,
                dock,
                line,
            })
        })();
        match parsed {
            Err(reason) => out.rejections.push(reject(reason)),
            Ok(rec) => {
                if !seen.insert(rec.id.clone()) {
                    out.rejections.push(reject(format!("duplicate id {:?}", rec.id)));
                } else {
                    out.records.push(rec);
                }
            }
        }
    }
    if out.records.is_empty() && out.rejections.is_empty() {
        return Err(DataError::Empty("no data rows".into()));
    }
    Ok(out)
}

pub fn ingest_compounds_file(path: &Path) -> Result<IngestResult, DataError> {
    ingest_compounds(std::fs::File::open(path)?)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Writes records in the ingest schema, with one `dock_*` column per ligase.
/// An optional trailing `reason` column carries filter failures.
pub fn write_compounds_csv(
    out: impl Write,
    records: &[(&CompoundRecord, Option<String>)],
    ligases: &[String],
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let with_reason = records.iter().any(|(_, r)| r.is_some());
    let mut header: Vec<String> = MANDATORY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(ligases.iter().map(|l| format!("{DOCK_PREFIX}{l}")));
    if with_reason {
        header.push("reason".into());
    }
    w.write_record(&header)?;
    for (r, reason) in records {
        let mut row = vec![
            r.id.clone(),
            r.smiles.clone(),
            r.library.to_string(),
            fmt_opt(r.mw),
            fmt_opt(r.logp),
            fmt_opt(r.logs),
            fmt_opt(r.logherg),
            fmt_opt(r.metab),
            fmt_opt(r.ro5_violations),
        ];
        row.extend(ligases.iter().map(|l| fmt_opt(r.dock.get(l))));
        if with_reason {
            row.push(reason.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
