use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use anyhow::{Context, Result};
use lcglue_core::chem::{parse_smiles, write_canonical_smiles, Molecule};
use lcglue_core::data::{build_training_pairs, ingest_compounds_file, PairPolicy};
use lcglue_core::geom::{bond_torsion_features, parse_sdf_v2000, Conformer};
use lcglue_core::jtree::{build_vocabulary, decompose, Vocabulary};
use lcglue_core::model::{prepare_example, Example, LigaseContext, LossReport, ModelError, SeqInput, Trainer};
use lcglue_core::report::{fmt_f64, loss_curve_svg, LossPoint};
use lcglue_core::tensor::Checkpoint;

use super::{csv_bytes, load_ligases, read_smi, read_text, schema, select_ligases};
use crate::config::RunConfig;
use crate::output::Output;
use crate::{fail, EXIT_NON_FINITE, EXIT_NO_CHECKPOINT};

pub const LOG_COLUMNS: [&str; 7] = ["epoch", "total", "kl", "beta", "wacc", "tacc", "sacc"];

struct Pair {
    smiles: String,
    ligase: String,
}

/// Training molecules paired with ligases. A `.smi` set pairs every molecule
/// with every selected ligase; a compound CSV goes through the affinity
/// policy and may exclude compounds.
fn training_pairs(cfg: &RunConfig, ligases: &[LigaseContext], out: &mut Output) -> Result<Vec<Pair>> {
    let path = cfg.require_path("train_set").map_err(schema)?;
    if path.extension().is_some_and(|e| e == "smi") {
        let mols = read_smi(&path)?;
        return Ok(ligases
            .iter()
            .flat_map(|l| mols.iter().map(|(s, _)| Pair { smiles: s.clone(), ligase: l.id.clone() }))
            .collect());
    }
    let res = ingest_compounds_file(&path).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    let policy = PairPolicy {
        ligases: ligases.iter().map(|l| l.id.clone()).collect(),
        include_low: cfg.get("include_low", false)?,
    };
    let (pairs, excluded) = build_training_pairs(&res.records, ligases, &policy).map_err(schema)?;
    if !excluded.is_empty() {
        let rows = excluded.iter().map(|e| vec![e.id.clone(), e.ligase.clone(), e.reason.clone()]);
        out.write("train_exclusions.csv", csv_bytes(&["id", "ligase", "reason"], rows)?)?;
    }
    Ok(pairs.into_iter().map(|p| Pair { smiles: p.compound.smiles, ligase: p.ligase.id }).collect())
}

/// SDF molecules keyed by canonical SMILES; the SDF atom order is kept so
/// the coordinates stay aligned.
fn conformers(cfg: &RunConfig) -> Result<HashMap<String, (Molecule, Conformer)>> {
    let Some(path) = cfg.path("conformers") else { return Ok(HashMap::new()) };
    let records = parse_sdf_v2000(&read_text(&path)?).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    Ok(records.into_iter().map(|(m, c)| (write_canonical_smiles(&m), (m, c))).collect())
}

fn read_log(path: &PathBuf, upto: u64) -> Result<Vec<Vec<String>>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let epoch: u64 = rec.get(0).unwrap_or("").parse().with_context(|| format!("bad epoch in {}", path.display()))?;
        if epoch <= upto {
            rows.push(rec.iter().map(str::to_string).collect());
        }
    }
    Ok(rows)
}

fn log_row(epoch: u64, r: &LossReport) -> Vec<String> {
    vec![epoch.to_string(), fmt_f64(r.total), fmt_f64(r.kl), fmt_f64(r.beta), fmt_f64(r.wacc), fmt_f64(r.tacc), fmt_f64(r.sacc)]
}

fn write_artifacts(out: &mut Output, trainer: &Trainer, log: &[Vec<String>]) -> Result<()> {
    out.write("model.ckpt", trainer.to_checkpoint().to_bytes())?;
    out.write("vocab.tsv", trainer.vocab.to_tsv())?;
    out.write("train_log.csv", csv_bytes(&LOG_COLUMNS, log.iter().cloned())?)?;
    let points: Vec<LossPoint> = log
        .iter()
        .filter_map(|r| Some(LossPoint { epoch: r[0].parse().ok()?, total: r[1].parse().ok()? }))
        .collect();
    out.write("loss_curve.svg", loss_curve_svg(&points))?;
    Ok(())
}

/// Preprocesses, then trains until `epochs` epochs are complete. With
/// `resume = true` the optimiser, β and RNG state come from `checkpoint`.
pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let seed = cfg.get("seed", 0u64)?;
    let all = load_ligases(cfg)?;
    let ligases = select_ligases(cfg, "train_ligases", &all)?;
    let model = cfg.model().map_err(schema)?;
    let schedule = cfg.schedule().map_err(schema)?;
    let resume = cfg.get("resume", false)?;
    let ck_path = cfg.path("checkpoint").unwrap_or_else(|| out.path("model.ckpt"));

    let pairs = training_pairs(cfg, &ligases, out)?;
    if pairs.is_empty() {
        return Err(schema("no training pairs"));
    }
    let sdf = conformers(cfg)?;
    let mut molecules: HashMap<String, (Molecule, Option<Conformer>)> = HashMap::new();
    for p in &pairs {
        if molecules.contains_key(&p.smiles) {
            continue;
        }
        let m = parse_smiles(&p.smiles).map_err(|e| schema(format!("training SMILES {}: {e}", p.smiles)))?;
        let entry = match sdf.get(&write_canonical_smiles(&m)) {
            Some((sm, c)) => (sm.clone(), Some(c.clone())),
            None => (m, None),
        };
        molecules.insert(p.smiles.clone(), entry);
    }
    out.note(format!(
        "{} training pairs over {} molecules; {} with conformers",
        pairs.len(),
        molecules.len(),
        molecules.values().filter(|(_, c)| c.is_some()).count()
    ));

    let (mut trainer, mut log) = if resume {
        if !ck_path.exists() {
            return Err(fail(EXIT_NO_CHECKPOINT, format!("checkpoint {} not found", ck_path.display())));
        }
        let ck = Checkpoint::load(&ck_path).map_err(|e| fail(EXIT_NO_CHECKPOINT, format!("{}: {e}", ck_path.display())))?;
        let mut t = Trainer::from_checkpoint(&ck)?;
        t.schedule.epochs = schedule.epochs;
        let log = read_log(&out.path("train_log.csv"), t.epoch)?;
        out.note(format!("resumed at epoch {} from {}", t.epoch, ck_path.display()));
        (t, log)
    } else {
        let unique: BTreeSet<&String> = pairs.iter().map(|p| &p.smiles).collect();
        let corpus: Vec<Molecule> = unique.iter().map(|s| molecules[*s].0.clone()).collect();
        let vocab: Vocabulary = build_vocabulary(&corpus).map_err(schema)?;
        (Trainer::new(model, schedule, vocab, seed).map_err(schema)?, Vec::new())
    };

    let seq: Vec<SeqInput> = ligases.iter().map(|l| SeqInput::new(l, &trainer.cfg)).collect::<Result<_, _>>().map_err(schema)?;
    let mut examples: Vec<Example> = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let (m, conf) = &molecules[&p.smiles];
        let tree = decompose(m).map_err(|e| schema(format!("{}: {e}", p.smiles)))?;
        let torsions = bond_torsion_features(m, conf.as_ref());
        let li = ligases.iter().position(|l| l.id == p.ligase).expect("pairs use selected ligases");
        examples.push(prepare_example(m, &tree, &torsions.per_bond, &trainer.vocab, &trainer.cfg, li).map_err(schema)?);
    }

    while trainer.epoch < trainer.schedule.epochs {
        let last_good = trainer.clone();
        match trainer.train_epoch(&examples, &seq) {
            Ok(r) if r.total.is_finite() => log.push(log_row(trainer.epoch, &r)),
            Ok(_) | Err(ModelError::NonFinite { .. }) => {
                let epoch = last_good.epoch + 1;
                write_artifacts(out, &last_good, &log)?;
                return Err(fail(EXIT_NON_FINITE, format!("non-finite loss in epoch {epoch}; checkpoint holds epoch {}", last_good.epoch)));
            }
            Err(e) => return Err(e.into()),
        }
    }
    write_artifacts(out, &trainer, &log)
}
