use anyhow::Result;
use lcglue_core::model::{generate, SampleStatus, SeqInput, Trainer};
use lcglue_core::tensor::{Checkpoint, RngStreams};

use super::{csv_bytes, load_ligases, schema, select_ligases};
use crate::config::RunConfig;
use crate::output::Output;
use crate::{fail, EXIT_NO_CHECKPOINT};

pub const SAMPLE_COLUMNS: [&str; 4] = ["sample_id", "ligase_id", "smiles", "status"];

/// `samples_per_ligase` draws for each of `generate_ligases`, in that order,
/// from one seeded stream; writes samples.csv.
pub fn run(cfg: &RunConfig, out: &mut Output) -> Result<()> {
    let seed = cfg.get("seed", 0u64)?;
    let n = cfg.get("samples_per_ligase", 10usize)?;
    let all = load_ligases(cfg)?;
    let ligases = select_ligases(cfg, "generate_ligases", &all)?;
    let ck_path = cfg.path("checkpoint").unwrap_or_else(|| out.path("model.ckpt"));
    if !ck_path.exists() {
        return Err(fail(EXIT_NO_CHECKPOINT, format!("checkpoint {} not found", ck_path.display())));
    }
    let ck = Checkpoint::load(&ck_path).map_err(|e| fail(EXIT_NO_CHECKPOINT, format!("{}: {e}", ck_path.display())))?;
    let trainer = Trainer::from_checkpoint(&ck)?;

    let mut rng = RngStreams::new(seed);
    let mut rows = Vec::new();
    let mut ok = 0;
    for ctx in &ligases {
        let input = SeqInput::new(ctx, &trainer.cfg).map_err(schema)?;
        for s in generate(&trainer.params, &trainer.cfg, &trainer.vocab, &input, n, &mut rng)? {
            ok += usize::from(s.status == SampleStatus::Ok);
            rows.push(vec![format!("{}-{:04}", ctx.id, s.index), ctx.id.clone(), s.smiles, s.status.to_string()]);
        }
    }
    out.note(format!("{ok} of {} samples decoded", rows.len()));
    out.write("samples.csv", csv_bytes(&SAMPLE_COLUMNS, rows)?)?;
    Ok(())
}
