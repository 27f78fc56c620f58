use std::collections::{BTreeSet, HashSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::chem::{check_valence, compute_descriptors, parse_smiles, write_canonical_smiles, Descriptors};

use super::qed_lite;

/// Canonical form of a sample that parses and passes valence checking.
fn canonical_valid(smiles: &str) -> Option<(String, Descriptors)> {
    let m = parse_smiles(smiles).ok()?;
    if !check_valence(&m).ok {
        return None;
    }
    Some((write_canonical_smiles(&m), compute_descriptors(&m)))
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Valid fraction and per-sample verdicts; `None` for an empty input.
pub fn validity(samples: &[String]) -> (Option<f64>, Vec<bool>) {
    let verdicts: Vec<bool> = samples.iter().map(|s| canonical_valid(s).is_some()).collect();
    let valid = verdicts.iter().filter(|v| **v).count();
    (ratio(valid, samples.len()), verdicts)
}

/// Distinct canonical forms over valid samples.
pub fn uniqueness(samples: &[String]) -> Option<f64> {
    let valid: Vec<String> = samples.iter().filter_map(|s| canonical_valid(s).map(|c| c.0)).collect();
    let distinct: HashSet<&String> = valid.iter().collect();
    ratio(distinct.len(), valid.len())
}

/// Unique valid canonical forms absent from `training` (already canonical),
/// over unique valid canonical forms.
pub fn novelty(samples: &[String], training: &HashSet<String>) -> Option<f64> {
    let distinct: BTreeSet<String> = samples.iter().filter_map(|s| canonical_valid(s).map(|c| c.0)).collect();
    let novel = distinct.iter().filter(|s| !training.contains(*s)).count();
    ratio(novel, distinct.len())
}

/// Count of MW > 500, logP > 5, HBD > 5, HBA > 10; passes with at most one.
pub fn lipinski_violations(d: &Descriptors) -> (u32, bool) {
    let n = [d.mw > 500.0, d.logp > 5.0, d.hbd > 5, d.hba > 10].iter().filter(|x| **x).count() as u32;
    (n, n <= 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDetail {
    pub index: usize,
    pub smiles: String,
    /// Empty for invalid samples.
    pub canonical: String,
    pub valid: bool,
    /// First occurrence of its canonical form among the valid samples.
    pub first_occurrence: bool,
    pub novel: bool,
    pub qed_lite: Option<f64>,
    pub lipinski_violations: Option<u32>,
}

/// Fractions are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub total: usize,
    pub valid: usize,
    pub unique: usize,
    pub novel: usize,
    pub validity: Option<f64>,
    pub uniqueness: Option<f64>,
    pub novelty: Option<f64>,
    pub mean_qed_lite: Option<f64>,
    pub lipinski_rate: Option<f64>,
    pub details: Vec<SampleDetail>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or("undefined".to_string(), |x| x.to_string())
}

impl GenerationReport {
    /// Denominator comments, a summary row, then one row per sample.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "# validity = valid / total; uniqueness = distinct valid / valid; novelty = distinct valid not in training / distinct valid")?;
        writeln!(out, "# qed_lite is a six-property logistic drug-likeness score (no structural alerts); lipinski_rate = valid with at most one violation / valid")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "kind", "index", "smiles", "canonical", "valid", "unique", "novel", "qed_lite", "lipinski_violations",
            "total", "n_valid", "n_unique", "n_novel", "validity", "uniqueness", "novelty", "mean_qed_lite",
            "lipinski_rate",
        ])?;
        let mut summary = vec![String::new(); 18];
        summary[0] = "summary".into();
        summary[9] = self.total.to_string();
        summary[10] = self.valid.to_string();
        summary[11] = self.unique.to_string();
        summary[12] = self.novel.to_string();
        summary[13] = opt(self.validity);
        summary[14] = opt(self.uniqueness);
        summary[15] = opt(self.novelty);
        summary[16] = opt(self.mean_qed_lite);
        summary[17] = opt(self.lipinski_rate);
        w.write_record(&summary)?;
        for d in &self.details {
            let mut row = vec![String::new(); 18];
            row[0] = "sample".into();
            row[1] = d.index.to_string();
            row[2] = d.smiles.clone();
            row[3] = d.canonical.clone();
            row[4] = (d.valid as u8).to_string();
            row[5] = (d.first_occurrence as u8).to_string();
            row[6] = (d.novel as u8).to_string();
            row[7] = d.qed_lite.map_or(String::new(), |q| q.to_string());
            row[8] = d.lipinski_violations.map_or(String::new(), |v| v.to_string());
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Every metric at once; `training` holds canonical SMILES.
pub fn evaluate_samples(samples: &[String], training: &HashSet<String>) -> GenerationReport {
    let mut seen = HashSet::new();
    let mut details = Vec::with_capacity(samples.len());
    let (mut qed_sum, mut lipinski_pass) = (0.0, 0);
    for (index, s) in samples.iter().enumerate() {
        let mut d = SampleDetail {
            index,
            smiles: s.clone(),
            canonical: String::new(),
            valid: false,
            first_occurrence: false,
            novel: false,
            qed_lite: None,
            lipinski_violations: None,
        };
        if let Some((canon, desc)) = canonical_valid(s) {
            d.valid = true;
            d.first_occurrence = seen.insert(canon.clone());
            d.novel = d.first_occurrence && !training.contains(&canon);
            let q = qed_lite(&desc);
            let (v, pass) = lipinski_violations(&desc);
            qed_sum += q;
            lipinski_pass += pass as usize;
            d.qed_lite = Some(q);
            d.lipinski_violations = Some(v);
            d.canonical = canon;
        }
        details.push(d);
    }
    let valid = details.iter().filter(|d| d.valid).count();
    let unique = seen.len();
    let novel = details.iter().filter(|d| d.novel).count();
    GenerationReport {
        total: samples.len(),
        valid,
        unique,
        novel,
        validity: ratio(valid, samples.len()),
        uniqueness: ratio(unique, valid),
        novelty: ratio(novel, unique),
        mean_qed_lite: (valid > 0).then(|| qed_sum / valid as f64),
        lipinski_rate: ratio(lipinski_pass, valid),
        details,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &[&str]) -> Vec<String> {
        s.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn fractions() {
        let (f, verdicts) = validity(&v(&["CCO", "c1ccccc1", "C("]));
        assert_eq!(f, Some(2.0 / 3.0));
        assert_eq!(verdicts, vec![true, true, false]);
        assert_eq!(validity(&[]).0, None);
        assert_eq!(uniqueness(&v(&["CCO", "OCC", "CCC"])), Some(2.0 / 3.0));
        assert_eq!(uniqueness(&v(&["CCO", "CCO", "CCO", "CCO"])), Some(0.25));
        let training: HashSet<String> = ["CCO".to_string()].into();
        assert_eq!(novelty(&v(&["CCO", "CCC"]), &training), Some(0.5));
        assert_eq!(novelty(&v(&["CCO"]), &training), Some(0.0));
        assert_eq!(novelty(&v(&["CCCC"]), &training), Some(1.0));
    }

    #[test]
    fn lipinski_rules() {
        let ethanol = compute_descriptors(&parse_smiles("CCO").unwrap());
        assert_eq!(lipinski_violations(&ethanol), (0, true));
        let d = Descriptors { mw: 600.0, logp: 6.0, hbd: 0, hba: 2, ..Descriptors::default() };
        assert_eq!(lipinski_violations(&d), (2, false));
        let d = Descriptors { mw: 501.0, ..Descriptors::default() };
        assert_eq!(lipinski_violations(&d), (1, true));
    }

    #[test]
    fn report_counts() {
        let training: HashSet<String> = ["CCO".to_string()].into();
        let r = evaluate_samples(&v(&["CCO", "OCC", "CCN", "C(", "c1ccccc1"]), &training);
        assert_eq!((r.total, r.valid, r.unique, r.novel), (5, 4, 3, 2));
        assert_eq!(r.details.len(), 5);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# validity = valid / total"));
        assert_eq!(text.lines().count(), 2 + 1 + 1 + 5);
        let empty = evaluate_samples(&[], &training);
        assert_eq!(empty.validity, None);
    }
}
