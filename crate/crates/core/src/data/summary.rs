use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::chem::{murcko_scaffold, parse_smiles, write_canonical_smiles};

use super::{classify_affinity, AffinityClass, CompoundRecord, DataError};

/// Bucket for compounds without a ring system.
pub const ACYCLIC: &str = "acyclic";

/// The eight descriptive statistics of one property. `std` is the sample
/// deviation (n − 1) and is NaN for a single value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertySummary {
    pub property: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Statistics of `values`; every field but `count` is NaN when empty.
pub fn summarize(property: &str, values: &[f64]) -> PropertySummary {
    let n = values.len();
    if n == 0 {
        let nan = f64::NAN;
        return PropertySummary {
            property: property.into(),
            count: 0,
            mean: nan,
            std: nan,
            min: nan,
            q25: nan,
            median: nan,
            q75: nan,
            max: nan,
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    PropertySummary {
        property: property.into(),
        count: n,
        mean,
        std,
        min: sorted[0],
        q25: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q75: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    }
}

/// One summary per ingest property, over the records that carry it.
pub fn summarize_properties(records: &[CompoundRecord]) -> Result<Vec<PropertySummary>, DataError> {
    if records.is_empty() {
        return Err(DataError::Empty("no records to summarize".into()));
    }
    type Getter = fn(&CompoundRecord) -> Option<f64>;
    let props: [(&str, Getter); 6] = [
        ("MW", |r| r.mw),
        ("logPo_w", |r| r.logp),
        ("logS", |r| r.logs),
        ("logHERG", |r| r.logherg),
        ("metab", |r| r.metab.map(f64::from)),
        ("ro5_violations", |r| r.ro5_violations.map(f64::from)),
    ];
    Ok(props
        .iter()
        .map(|(name, get)| summarize(name, &records.iter().filter_map(get).collect::<Vec<_>>()))
        .collect())
}

fn cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn summary_csv(summaries: &[PropertySummary], out: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["property", "count", "mean", "std", "min", "25%", "50%", "75%", "max"])?;
    for s in summaries {
        w.write_record([
            s.property.clone(),
            s.count.to_string(),
            cell(s.mean),
            cell(s.std),
            cell(s.min),
            cell(s.q25),
            cell(s.median),
            cell(s.q75),
            cell(s.max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Murcko scaffolds of the records scored into `class` against `ligase`,
/// ranked by count (descending) then SMILES.
pub fn scaffold_frequency(
    records: &[CompoundRecord],
    ligase: &str,
    class: AffinityClass,
) -> Result<Vec<(String, usize)>, DataError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in records {
        let Some(&score) = r.dock.get(ligase) else { continue };
        if classify_affinity(score)? != class {
            continue;
        }
        let m = parse_smiles(&r.smiles).map_err(|e| DataError::Format { line: r.line, msg: format!("{}: {e}", r.id) })?;
        let scaffold = murcko_scaffold(&m);
        let key = if scaffold.is_empty() { ACYCLIC.to_string() } else { write_canonical_smiles(&scaffold) };
        *counts.entry(key).or_default() += 1;
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Library;

    #[test]
    fn small_sets() {
        let s = summarize("x", &[1.0, 2.0, 3.0]);
        assert_eq!((s.mean, s.std, s.median), (2.0, 1.0, 2.0));
        let c = summarize("x", &[4.0; 5]);
        assert_eq!((c.std, c.min, c.max), (0.0, 4.0, 4.0));
        let skew = summarize("x", &[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(skew.q75, 4.0);
        assert_eq!(skew.q25, 2.0);
        assert!(summarize("x", &[7.0]).std.is_nan());
    }

    fn rec(id: &str, smiles: &str, score: f64) -> CompoundRecord {
        CompoundRecord {
            id: id.into(),
            smiles: smiles.into(),
            library: Library::Other,
            mw: None,
            logp: None,
            logs: None,
            logherg: None,
            metab: None,
            ro5_violations: None,
            dock: [("VHL".to_string(), score)].into_iter().collect(),
            line: 0,
        }
    }

    #[test]
    fn scaffolds() {
        let recs = vec![rec("a", "Cc1ccccc1", -7.0), rec("b", "CCc1ccccc1", -6.0), rec("c", "CCO", -8.0), rec("d", "CC", -2.0)];
        let r = scaffold_frequency(&recs, "VHL", AffinityClass::High).unwrap();
        assert_eq!(r, vec![("c1ccccc1".to_string(), 2), (ACYCLIC.to_string(), 1)]);
        assert!(scaffold_frequency(&recs, "CRBN", AffinityClass::High).unwrap().is_empty());
    }
}
