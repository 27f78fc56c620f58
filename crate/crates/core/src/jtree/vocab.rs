use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::chem::Molecule;

use super::{decompose, TreeError};

/// Clique labels ordered by (count desc, label asc).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    labels: Vec<String>,
    counts: Vec<usize>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_counts(counts: impl IntoIterator<Item = (String, usize)>) -> Vocabulary {
        let mut merged: BTreeMap<String, usize> = BTreeMap::new();
        for (label, c) in counts {
            *merged.entry(label).or_default() += c;
        }
        let mut pairs: Vec<(String, usize)> = merged.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = pairs.iter().enumerate().map(|(i, (l, _))| (l.clone(), i)).collect();
        let (labels, counts) = pairs.into_iter().unzip();
        Vocabulary { labels, counts, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn count_of(&self, label: &str) -> usize {
        self.index_of(label).map_or(0, |i| self.counts[i])
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// One `label<TAB>count` line per entry, in vocabulary order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (l, c) in self.labels.iter().zip(&self.counts) {
            out.push_str(l);
            out.push('\t');
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Vocabulary, TreeError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (label, count) = line.split_once('\t').ok_or_else(|| TreeError::VocabFormat {
                line: i + 1,
                msg: "expected label<TAB>count".into(),
            })?;
            let count: usize = count.trim().parse().map_err(|_| TreeError::VocabFormat {
                line: i + 1,
                msg: format!("bad count '{count}'"),
            })?;
            if label.is_empty() {
                return Err(TreeError::VocabFormat { line: i + 1, msg: "empty label".into() });
            }
            entries.push((label.to_string(), count));
        }
        let vocab = Vocabulary::from_counts(entries.clone());
        if vocab.len() != entries.len() {
            return Err(TreeError::VocabFormat { line: 0, msg: "duplicate labels".into() });
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<(), TreeError> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocabulary, TreeError> {
        Vocabulary::from_tsv(&std::fs::read_to_string(path)?)
    }
}

/// Label frequencies over every clique of every molecule.
pub fn build_vocabulary(corpus: &[Molecule]) -> Result<Vocabulary, TreeError> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (i, m) in corpus.iter().enumerate() {
        let tree = decompose(m).map_err(|e| TreeError::Molecule {
            id: if m.source_text().is_empty() {
                format!("#{i}")
            } else {
                m.source_text().to_string()
            },
            source: Box::new(e),
        })?;
        for node in tree.nodes {
            *counts.entry(node.label).or_default() += 1;
        }
    }
    Ok(Vocabulary::from_counts(counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn mols(list: &[&str]) -> Vec<Molecule> {
        list.iter().map(|s| parse_smiles(s).unwrap()).collect()
    }

    #[test]
    fn ethanol() {
        let v = build_vocabulary(&mols(&["CCO"])).unwrap();
        assert_eq!(v.labels(), ["CC", "CO"]);
        assert_eq!(v.counts(), [1, 1]);
    }

    #[test]
    fn benzene_and_toluene() {
        let v = build_vocabulary(&mols(&["c1ccccc1", "Cc1ccccc1"])).unwrap();
        assert_eq!(v.count_of("c1ccccc1"), 2);
        assert_eq!(v.count_of("CC"), 1);
        assert_eq!(v.index_of("c1ccccc1"), Some(0));
    }

    #[test]
    fn empty_corpus() {
        assert!(build_vocabulary(&[]).unwrap().is_empty());
    }

    #[test]
    fn error_names_the_molecule() {
        let err = build_vocabulary(&mols(&["CC", "C.C"])).unwrap_err();
        assert!(err.to_string().contains("C.C"), "{err}");
    }

    #[test]
    fn tsv_round_trip() {
        let v = build_vocabulary(&mols(&["CCO", "c1ccccc1CC", "CC(C)C"])).unwrap();
        let text = v.to_tsv();
        let back = Vocabulary::from_tsv(&text).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.to_tsv(), text);
        assert!(Vocabulary::from_tsv("CC 3\n").is_err());
    }
}
