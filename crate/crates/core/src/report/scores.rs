use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::Serialize;

use super::{fmt_f64, ReportError};

/// Design label used when the scores file has no `design_ligase` column.
pub const ALL_DESIGNS: &str = "all";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub compound_id: String,
    pub ligase: String,
    pub score: f64,
    /// Ligase the compound was generated for, when known.
    pub design: Option<String>,
    pub line: u64,
}

/// Reads `compound_id,ligase,score[,design_ligase]`. When `known` is given,
/// both the docked and the design ligase must be in it.
pub fn read_scores(reader: impl Read, known: Option<&[String]>) -> Result<Vec<ScoreRow>, ReportError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = ["compound_id", "ligase", "score"];
    let missing: Vec<String> = required.iter().filter(|c| col(c).is_none()).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(ReportError::MissingColumns(missing));
    }
    let (ci, li, si, di) = (col("compound_id").unwrap(), col("ligase").unwrap(), col("score").unwrap(), col("design_ligase"));
    let check = |ligase: &str, line: u64| match known {
        Some(k) if !k.iter().any(|x| x == ligase) => Err(ReportError::UnknownLigase { line, ligase: ligase.to_string() }),
        _ => Ok(()),
    };
    let mut seen = HashMap::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or("").to_string();
        let compound_id = field(ci);
        if compound_id.is_empty() {
            return Err(ReportError::Format { line, msg: "empty compound_id".into() });
        }
        let ligase = field(li);
        check(&ligase, line)?;
        let score: f64 = field(si)
            .parse()
            .map_err(|_| ReportError::Format { line, msg: format!("score `{}` is not a number", field(si)) })?;
        if !score.is_finite() {
            return Err(ReportError::NonFinite { line });
        }
        let design = di.map(field).filter(|d| !d.is_empty());
        if let Some(d) = &design {
            check(d, line)?;
        }
        if let Some(first) = seen.insert((compound_id.clone(), ligase.clone()), line) {
            return Err(ReportError::Format {
                line,
                msg: format!("duplicate score for ({compound_id}, {ligase}); first on line {first}"),
            });
        }
        rows.push(ScoreRow { compound_id, ligase, score, design, line });
    }
    if rows.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(rows)
}

/// Compounds sorted by id, ligases sorted by name; absent pairs are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreGrid {
    pub compounds: Vec<String>,
    pub ligases: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl ScoreGrid {
    pub fn from_rows(rows: &[ScoreRow]) -> ScoreGrid {
        let compounds: Vec<String> = rows.iter().map(|r| r.compound_id.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let ligases: Vec<String> = rows.iter().map(|r| r.ligase.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut cells = vec![vec![None; ligases.len()]; compounds.len()];
        for r in rows {
            let i = compounds.binary_search(&r.compound_id).unwrap();
            let j = ligases.binary_search(&r.ligase).unwrap();
            cells[i][j] = Some(r.score);
        }
        ScoreGrid { compounds, ligases, cells }
    }

    /// Smallest and largest present score.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.cells.iter().flatten().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanRow {
    pub design_ligase: String,
    pub docked_ligase: String,
    pub count: usize,
    pub mean: f64,
}

/// Mean score per (design ligase, docked ligase), summed in compound-id order
/// so the result does not depend on input row order.
pub fn mean_table(rows: &[ScoreRow]) -> Vec<MeanRow> {
    let mut groups: BTreeMap<(String, String), Vec<(&str, f64)>> = BTreeMap::new();
    for r in rows {
        let design = r.design.clone().unwrap_or_else(|| ALL_DESIGNS.to_string());
        groups.entry((design, r.ligase.clone())).or_default().push((&r.compound_id, r.score));
    }
    groups
        .into_iter()
        .map(|((design_ligase, docked_ligase), mut v)| {
            v.sort_by(|a, b| a.0.cmp(b.0));
            let sum: f64 = v.iter().map(|x| x.1).sum();
            MeanRow { design_ligase, docked_ligase, count: v.len(), mean: sum / v.len() as f64 }
        })
        .collect()
}

pub fn write_means_csv(rows: &[MeanRow], out: impl Write) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["design_ligase", "docked_ligase", "count", "mean"])?;
    for r in rows {
        w.write_record([r.design_ligase.clone(), r.docked_ligase.clone(), r.count.to_string(), fmt_f64(r.mean)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "compound_id,ligase,score,design_ligase\n\
        g2,VHL,-6.0,VHL\n\
        g1,VHL,-5.0,VHL\n\
        g1,CRBN,-4.0,VHL\n\
        h1,CRBN,-7.5,CRBN\n";

    #[test]
    fn grid_is_sorted_and_sparse() {
        let rows = read_scores(SAMPLE.as_bytes(), None).unwrap();
        let g = ScoreGrid::from_rows(&rows);
        assert_eq!(g.compounds, ["g1", "g2", "h1"]);
        assert_eq!(g.ligases, ["CRBN", "VHL"]);
        assert_eq!(g.cells[1], [None, Some(-6.0)]);
        assert_eq!(g.range(), Some((-7.5, -4.0)));
    }

    #[test]
    fn means_by_design_and_target() {
        let rows = read_scores(SAMPLE.as_bytes(), None).unwrap();
        let m = mean_table(&rows);
        assert_eq!(m.len(), 3);
        assert_eq!((m[1].design_ligase.as_str(), m[1].docked_ligase.as_str(), m[1].mean), ("VHL", "CRBN", -4.0));
        assert_eq!((m[2].count, m[2].mean), (2, -5.5));
        let plain = read_scores("compound_id,ligase,score\na,X,1\n".as_bytes(), None).unwrap();
        assert_eq!(mean_table(&plain)[0].design_ligase, ALL_DESIGNS);
    }

    #[test]
    fn rejects_bad_input() {
        let known = vec!["VHL".to_string()];
        assert!(matches!(read_scores(SAMPLE.as_bytes(), Some(&known)), Err(ReportError::UnknownLigase { line: 4, .. })));
        assert!(matches!(read_scores("compound_id,score\n".as_bytes(), None), Err(ReportError::MissingColumns(c)) if c == ["ligase"]));
        assert!(matches!(read_scores("compound_id,ligase,score\na,X,NaN\n".as_bytes(), None), Err(ReportError::NonFinite { line: 2 })));
        assert!(matches!(read_scores("compound_id,ligase,score\na,X,1\na,X,2\n".as_bytes(), None), Err(ReportError::Format { line: 3, .. })));
        assert!(matches!(read_scores("compound_id,ligase,score\n".as_bytes(), None), Err(ReportError::Empty)));
    }
}
