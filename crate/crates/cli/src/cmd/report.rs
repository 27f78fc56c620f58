use std::fs::File;

use anyhow::Result;
use lcglue_core::data::parse_ligase_fasta;
use lcglue_core::report::{heatmap_svg, mean_table, read_scores, write_means_csv, ReportError, ScoreGrid};

use super::{read_text, schema};
use crate::config::RunConfig;
use crate::output::Output;
use crate::{fail, EXIT_UNKNOWN_LIGASE};

/// Known ligase ids: the `ligases` list, else the FASTA headers, else any.
fn known_ligases(cfg: &RunConfig) -> Result<Option<Vec<String>>> {
    let listed = cfg.list("ligases");
    if !listed.is_empty() {
        return Ok(Some(listed));
    }
    match cfg.path("ligase_fasta") {
        Some(p) => {
            let ctx = parse_ligase_fasta(&read_text(&p)?).map_err(|e| schema(format!("{}: {e}", p.display())))?;
            Ok(Some(ctx.into_iter().map(|c| c.id).collect()))
        }
        None => Ok(None),
    }
}

/// Writes heatmap.svg and score_means.csv.
pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let path = cfg.require_path("scores").map_err(schema)?;
    let known = known_ligases(cfg)?;
    let rows = read_scores(File::open(&path)?, known.as_deref()).map_err(|e| match e {
        ReportError::UnknownLigase { .. } => fail(EXIT_UNKNOWN_LIGASE, format!("{}: {e}", path.display())),
        other => schema(format!("{}: {other}", path.display())),
    })?;
    let grid = ScoreGrid::from_rows(&rows);
    out.write("heatmap.svg", heatmap_svg(&grid))?;
    let mut buf = Vec::new();
    write_means_csv(&mean_table(&rows), &mut buf)?;
    out.write("score_means.csv", buf)?;
    out.note(format!("{} compounds x {} ligases", grid.compounds.len(), grid.ligases.len()));
    Ok(())
}
