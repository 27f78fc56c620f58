use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{CompoundRecord, DataError, Library};

/// High below −5 kcal/mol, Low on [−5, −1], None above −1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AffinityClass {
    High,
    Low,
    NoAffinity,
}

impl AffinityClass {
    pub const ALL: [AffinityClass; 3] = [AffinityClass::High, AffinityClass::Low, AffinityClass::NoAffinity];

    pub fn parse(s: &str) -> Option<AffinityClass> {
        AffinityClass::ALL.into_iter().find(|c| c.to_string().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for AffinityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffinityClass::High => "High",
            AffinityClass::Low => "Low",
            AffinityClass::NoAffinity => "None",
        })
    }
}

pub fn classify_affinity(score: f64) -> Result<AffinityClass, DataError> {
    if !score.is_finite() {
        return Err(DataError::NonFinite(score));
    }
    Ok(if score < -5.0 {
        AffinityClass::High
    } else if score <= -1.0 {
        AffinityClass::Low
    } else {
        AffinityClass::NoAffinity
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AffinityRow {
    pub ligase: String,
    /// `None` on the per-ligase total row.
    pub library: Option<Library>,
    pub high: usize,
    pub low: usize,
    pub none: usize,
    /// Records with no score for this ligase; not part of `total`.
    pub missing: usize,
}

impl AffinityRow {
    pub fn total(&self) -> usize {
        self.high + self.low + self.none
    }

    fn add(&mut self, o: &AffinityRow) {
        self.high += o.high;
        self.low += o.low;
        self.none += o.none;
        self.missing += o.missing;
    }
}

/// Counts per (ligase, library), a total row per ligase, and a grand total.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AffinityTable {
    pub rows: Vec<AffinityRow>,
    pub grand: AffinityRow,
}

impl AffinityTable {
    pub fn write_csv(&self, out: impl Write) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ligase", "library", "High", "Low", "None", "total", "missing"])?;
        for r in self.rows.iter().chain(std::iter::once(&self.grand)) {
            w.write_record([
                r.ligase.clone(),
                r.library.map_or("all".to_string(), |l| l.to_string()),
                r.high.to_string(),
                r.low.to_string(),
                r.none.to_string(),
                r.total().to_string(),
                r.missing.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn affinity_count_table(records: &[CompoundRecord], ligases: &[String]) -> Result<AffinityTable, DataError> {
    let mut table = AffinityTable { grand: AffinityRow { ligase: "all".into(), ..Default::default() }, ..Default::default() };
    for lig in ligases {
        let mut by_lib: BTreeMap<Library, AffinityRow> = BTreeMap::new();
        for r in records {
            let row = by_lib.entry(r.library).or_insert_with(|| AffinityRow {
                ligase: lig.clone(),
                library: Some(r.library),
                ..Default::default()
            });
            match r.dock.get(lig) {
                None => row.missing += 1,
                Some(&s) => match classify_affinity(s)? {
                    AffinityClass::High => row.high += 1,
                    AffinityClass::Low => row.low += 1,
                    AffinityClass::NoAffinity => row.none += 1,
                },
            }
        }
        let mut total = AffinityRow { ligase: lig.clone(), library: None, ..Default::default() };
        for row in by_lib.into_values() {
            total.add(&row);
            table.rows.push(row);
        }
        table.grand.add(&total);
        table.rows.push(total);
    }
    Ok(table)
}
