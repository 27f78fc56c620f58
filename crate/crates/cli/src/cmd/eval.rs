use std::collections::HashSet;

use anyhow::Result;
use lcglue_core::chem::{circular_fingerprint, parse_smiles, write_canonical_smiles};
use lcglue_core::eval::{evaluate_samples, project_2d, ProjectionConfig, ProjectionMethod};
use lcglue_core::report::{fmt_f64, metric_panel_svg, projection_svg, ProjectedPoint, Series};

use super::{csv_bytes, read_molecule_list, schema};
use crate::config::RunConfig;
use crate::output::Output;
use crate::{fail, EXIT_NO_SAMPLES};

struct Sample {
    id: String,
    smiles: String,
}

fn read_samples(path: &std::path::Path) -> Result<Vec<Sample>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id), Some(smiles)) = (col("sample_id"), col("smiles")) else {
        return Err(schema(format!("{}: needs sample_id and smiles columns", path.display())));
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| schema(format!("{}: {e}", path.display())))?;
        out.push(Sample { id: rec.get(id).unwrap_or("").to_string(), smiles: rec.get(smiles).unwrap_or("").to_string() });
    }
    Ok(out)
}

/// Writes eval_report.csv and eval_metrics.svg, plus projection.csv and
/// projection.svg when at least three points are available.
pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let seed = cfg.get("seed", 0u64)?;
    let samples_path = cfg.path("samples").unwrap_or_else(|| out.path("samples.csv"));
    if !samples_path.exists() {
        return Err(schema(format!("sample file {} not found", samples_path.display())));
    }
    let samples = read_samples(&samples_path)?;
    if samples.is_empty() {
        return Err(fail(EXIT_NO_SAMPLES, format!("{} has no samples", samples_path.display())));
    }
    let training_path = match cfg.path("training_set") {
        Some(p) => p,
        None => cfg.require_path("train_set").map_err(schema)?,
    };
    let training = read_molecule_list(&training_path)?;
    let mut canonical = Vec::with_capacity(training.len());
    for (smiles, name) in &training {
        let m = parse_smiles(smiles).map_err(|e| schema(format!("training molecule {name}: {e}")))?;
        canonical.push((name.clone(), write_canonical_smiles(&m)));
    }
    let known: HashSet<String> = canonical.iter().map(|(_, c)| c.clone()).collect();

    let smiles: Vec<String> = samples.iter().map(|s| s.smiles.clone()).collect();
    let report = evaluate_samples(&smiles, &known);
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    out.write("eval_report.csv", &buf)?;
    out.write("eval_metrics.svg", metric_panel_svg(&report))?;

    let method: ProjectionMethod = cfg.get("projection_method", "pca".to_string())?.parse().map_err(schema)?;
    let proj = ProjectionConfig {
        method,
        perplexity: cfg.get("perplexity", 15.0)?,
        iterations: cfg.get("tsne_iterations", 500usize)?,
        seed,
    };
    let train_max = cfg.get("projection_training_max", 100usize)?;
    let gen_max = cfg.get("projection_generated_max", 100usize)?;
    let radius = cfg.get("fingerprint_radius", 2u32)?;
    let bits = cfg.get("fingerprint_bits", 2048usize)?;
    if !bits.is_power_of_two() {
        return Err(schema("fingerprint_bits must be a power of two"));
    }

    let mut points: Vec<(String, Series, String)> =
        canonical.iter().take(train_max).map(|(n, c)| (n.clone(), Series::Training, c.clone())).collect();
    for d in report.details.iter().filter(|d| d.valid && d.first_occurrence).take(gen_max) {
        points.push((samples[d.index].id.clone(), Series::Generated, d.canonical.clone()));
    }
    if points.len() < 3 {
        out.note(format!("projection skipped: {} points", points.len()));
        return Ok(());
    }
    let fps: Vec<Vec<f64>> = points
        .iter()
        .map(|(_, _, c)| Ok(circular_fingerprint(&parse_smiles(c)?, radius, bits).to_f64()))
        .collect::<Result<_, lcglue_core::chem::ChemError>>()?;
    let xy = project_2d(&fps, &proj).map_err(schema)?;
    let projected: Vec<ProjectedPoint> = points
        .into_iter()
        .zip(xy)
        .map(|((id, series, _), [x, y])| ProjectedPoint { id, series, x, y })
        .collect();
    let rows = projected.iter().map(|p| vec![p.id.clone(), p.series.as_str().to_string(), fmt_f64(p.x), fmt_f64(p.y)]);
    out.write("projection.csv", csv_bytes(&["id", "series", "x", "y"], rows)?)?;
    out.write("projection.svg", projection_svg(&projected))?;
    Ok(())
}
