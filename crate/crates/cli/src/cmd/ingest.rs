use anyhow::Result;
use lcglue_core::data::{
    admet_filter, affinity_count_table, ingest_compounds_file, scaffold_frequency, summarize_properties, summary_csv,
    write_compounds_csv, AffinityClass,
};

use super::{csv_bytes, schema};
use crate::config::RunConfig;
use crate::output::Output;

/// Writes passed.csv, failed.csv, property_summary.csv, affinity_counts.csv
/// and scaffolds.csv. Malformed rows abort with line diagnostics unless
/// `ingest_strict = false`, in which case they go to rejected.csv.
pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let path = cfg.require_path("compounds").map_err(schema)?;
    let strict = cfg.get("ingest_strict", true)?;
    let spec = cfg.filter().map_err(schema)?;
    let res = ingest_compounds_file(&path).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    if !res.rejections.is_empty() {
        let lines: Vec<String> = res
            .rejections
            .iter()
            .map(|r| format!("line {}{}: {}", r.line, r.id.as_ref().map_or(String::new(), |id| format!(" ({id})")), r.reason))
            .collect();
        if strict {
            return Err(schema(format!("{} malformed rows in {}\n{}", lines.len(), path.display(), lines.join("\n"))));
        }
        let rows = res
            .rejections
            .iter()
            .map(|r| vec![r.line.to_string(), r.id.clone().unwrap_or_default(), r.reason.clone()]);
        out.write("rejected.csv", csv_bytes(&["line", "id", "reason"], rows)?)?;
        out.note(format!("{} malformed rows skipped", lines.len()));
    }

    let outcome = admet_filter(&res.records, &spec);
    let mut buf = Vec::new();
    let passed: Vec<_> = outcome.passed.iter().map(|r| (r, None)).collect();
    write_compounds_csv(&mut buf, &passed, &res.ligases)?;
    out.write("passed.csv", &buf)?;
    buf.clear();
    let failed: Vec<_> = outcome.failed.iter().map(|(r, why)| (r, Some(why.join("; ")))).collect();
    write_compounds_csv(&mut buf, &failed, &res.ligases)?;
    out.write("failed.csv", &buf)?;
    out.note(format!("{} passed, {} failed the ADMET windows", outcome.passed.len(), outcome.failed.len()));

    if outcome.passed.is_empty() {
        out.note("no compound passed; summary tables skipped");
        return Ok(());
    }
    buf.clear();
    summary_csv(&summarize_properties(&outcome.passed)?, &mut buf)?;
    out.write("property_summary.csv", &buf)?;
    buf.clear();
    affinity_count_table(&outcome.passed, &res.ligases)?.write_csv(&mut buf)?;
    out.write("affinity_counts.csv", &buf)?;

    let mut rows = Vec::new();
    for ligase in &res.ligases {
        for class in AffinityClass::ALL {
            for (rank, (scaffold, count)) in scaffold_frequency(&outcome.passed, ligase, class)?.into_iter().enumerate() {
                rows.push(vec![ligase.clone(), class.to_string(), (rank + 1).to_string(), scaffold, count.to_string()]);
            }
        }
    }
    out.write("scaffolds.csv", csv_bytes(&["ligase", "class", "rank", "scaffold", "count"], rows)?)?;
    Ok(())
}
