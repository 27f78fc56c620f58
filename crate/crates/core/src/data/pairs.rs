use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles, Molecule};
use crate::jtree::{decompose, JunctionTree};
use crate::model::LigaseContext;

use super::{classify_affinity, AffinityClass, CompoundRecord, DataError};

/// Which ligases to pair and whether Low-affinity compounds count as positives.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PairPolicy {
    /// Ligase ids; empty means every context.
    pub ligases: Vec<String>,
    pub include_low: bool,
}

#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub compound: CompoundRecord,
    pub ligase: LigaseContext,
    pub affinity: AffinityClass,
    pub molecule: Molecule,
    pub tree: JunctionTree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub id: String,
    pub ligase: String,
    pub reason: String,
}

/// Pairs each selected ligase with its qualifying compounds, in ligase then
/// record order. Compounds that fail to parse or decompose are excluded.
pub fn build_training_pairs(
    records: &[CompoundRecord],
    contexts: &[LigaseContext],
    policy: &PairPolicy,
) -> Result<(Vec<TrainingPair>, Vec<Exclusion>), DataError> {
    let selected: Vec<&LigaseContext> = if policy.ligases.is_empty() {
        contexts.iter().collect()
    } else {
        policy
            .ligases
            .iter()
            .map(|id| contexts.iter().find(|c| &c.id == id).ok_or_else(|| DataError::UnknownLigase(id.clone())))
            .collect::<Result<_, _>>()?
    };
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for ctx in selected {
        for r in records {
            let Some(&score) = r.dock.get(&ctx.id) else { continue };
            let class = classify_affinity(score)?;
            let wanted = class == AffinityClass::High || (policy.include_low && class == AffinityClass::Low);
            if !wanted {
                continue;
            }
            let built = parse_smiles(&r.smiles)
                .map_err(|e| e.to_string())
                .and_then(|m| decompose(&m).map(|t| (m, t)).map_err(|e| e.to_string()));
            match built {
                Ok((molecule, tree)) => pairs.push(TrainingPair {
                    compound: r.clone(),
                    ligase: ctx.clone(),
                    affinity: class,
                    molecule,
                    tree,
                }),
                Err(reason) => excluded.push(Exclusion { id: r.id.clone(), ligase: ctx.id.clone(), reason }),
            }
        }
    }
    Ok((pairs, excluded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Library;

    fn rec(id: &str, smiles: &str, dock: &[(&str, f64)]) -> CompoundRecord {
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
            dock: dock.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            line: 0,
        }
    }

    #[test]
    fn policies() {
        let ctx = vec![LigaseContext::new("VHL", "ACD"), LigaseContext::new("CRBN", "DCA")];
        let recs = vec![
            rec("a", "CCO", &[("VHL", -6.0)]),
            rec("b", "c1ccccc1", &[("VHL", -7.0)]),
            rec("c", "CCN", &[("VHL", -5.5), ("CRBN", -3.0)]),
            rec("d", "CC.O", &[("CRBN", -9.0)]),
        ];
        let (p, ex) = build_training_pairs(&recs, &ctx, &PairPolicy { ligases: vec!["VHL".into()], include_low: false }).unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.iter().all(|x| x.ligase.id == "VHL"));
        assert!(ex.is_empty());
        let (p, ex) = build_training_pairs(&recs, &ctx, &PairPolicy { ligases: vec![], include_low: true }).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].id, "d");
        assert!(build_training_pairs(&recs, &ctx, &PairPolicy { ligases: vec!["MDM2".into()], include_low: false }).is_err());
    }
}
