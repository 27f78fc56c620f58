use crate::model::{LigaseContext, AMINO_ACIDS};

use super::DataError;

/// Reads `>ID` headers followed by sequence lines. Blank lines and `#`
/// comments are ignored; ids must be unique and sequences non-empty.
pub fn parse_ligase_fasta(text: &str) -> Result<Vec<LigaseContext>, DataError> {
    let mut out: Vec<LigaseContext> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(DataError::Format { line: lineno, msg: "empty ligase id".into() });
            }
            if out.iter().any(|c| c.id == id) {
                return Err(DataError::Format { line: lineno, msg: format!("duplicate ligase {id:?}") });
            }
            out.push(LigaseContext::new(id, ""));
            continue;
        }
        let Some(cur) = out.last_mut() else {
            return Err(DataError::Format { line: lineno, msg: "sequence before the first header".into() });
        };
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            let c = c.to_ascii_uppercase();
            if !AMINO_ACIDS.contains(c) {
                return Err(DataError::Format { line: lineno, msg: format!("unknown residue {c:?} in {}", cur.id) });
            }
            cur.sequence.push(c);
        }
    }
    if let Some(c) = out.iter().find(|c| c.sequence.is_empty()) {
        return Err(DataError::Empty(format!("ligase {} has no sequence", c.id)));
    }
    if out.is_empty() {
        return Err(DataError::Empty("no ligase records".into()));
    }
    Ok(out)
}

/// Applies `ID: v1, v2, ...` lines as precomputed ligase vectors.
pub fn attach_embeddings(contexts: &mut [LigaseContext], text: &str) -> Result<(), DataError> {
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| DataError::Format { line: i + 1, msg };
        let (id, values) = line.split_once(':').ok_or_else(|| err("expected `id: values`".into()))?;
        let id = id.trim();
        let ctx = contexts.iter_mut().find(|c| c.id == id).ok_or_else(|| DataError::UnknownLigase(id.to_string()))?;
        let v: Vec<f64> = values
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| err(format!("bad value {s:?}"))))
            .collect::<Result<_, _>>()?;
        if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
            return Err(DataError::NonFinite(*bad));
        }
        ctx.external = Some(v);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fasta_and_sidecar() {
        let mut c = parse_ligase_fasta("# binding sites\n>CRBN pocket\nHWSF\nqgdl\n>VHL\nPVDV\n").unwrap();
        assert_eq!(c[0].sequence, "HWSFQGDL");
        assert_eq!(c[1].id, "VHL");
        attach_embeddings(&mut c, "VHL: 0.5, -1, 2\n").unwrap();
        assert_eq!(c[1].external, Some(vec![0.5, -1.0, 2.0]));
        assert!(attach_embeddings(&mut c, "MDM2: 1\n").is_err());
    }

    #[test]
    fn fasta_errors() {
        assert!(parse_ligase_fasta("ACD\n").is_err());
        assert!(parse_ligase_fasta(">A\nAXZ\n").is_err());
        assert!(parse_ligase_fasta(">A\n").is_err());
        assert!(parse_ligase_fasta(">A\nAC\n>A\nCC\n").is_err());
    }
}
