use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use lcglue_core::chem::{check_valence, parse_smiles};
use lcglue_core::geom::{write_sdf_v2000, Conformer};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn glue20() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/glue20.smi")
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_lcglue"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\n{}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    r.records().map(|x| x.unwrap().iter().map(str::to_string).collect()).collect()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn ingest_writes_tables_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("compounds = {}\n", fixture("compounds10.csv").display());
    ok(&run(dir.path(), &cfg, &["ingest"]));
    let summary = read(dir.path(), "property_summary.csv");
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 9);
    assert_eq!(&header[1..], ["count", "mean", "std", "min", "25%", "50%", "75%", "max"]);
    let failed = csv_rows(&read(dir.path(), "failed.csv"));
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0][0], "C010");
    assert!(failed[0].last().unwrap().contains("logPo_w"));
    assert_eq!(csv_rows(&read(dir.path(), "passed.csv")).len(), 9);
    assert!(read(dir.path(), "affinity_counts.csv").starts_with("ligase,library,High,Low,None,total,missing"));
    let manifest = read(dir.path(), "MANIFEST.ingest");
    assert!(manifest.contains("status = ok"));
    assert!(manifest.contains("  passed.csv"));

    let first = snapshot(dir.path());
    ok(&run(dir.path(), &cfg, &["ingest"]));
    assert_eq!(first, snapshot(dir.path()));
}

#[test]
fn ingest_schema_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "id,smiles,library,MW\nx,CCO,other,46\n").unwrap();
    let o = run(dir.path(), &format!("compounds = {}\n", bad.display()), &["ingest"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("logPo_w"));

    let text = fs::read_to_string(fixture("compounds10.csv")).unwrap().replace("C003,CC(=O)Nc1ccc(O)cc1,Vitas,151.16", "C003,CC(=O)Nc1ccc(O)cc1,Vitas,heavy");
    fs::write(&bad, text).unwrap();
    let o = run(dir.path(), &format!("compounds = {}\n", bad.display()), &["ingest"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4 (C003)"));
    assert!(read(dir.path(), "MANIFEST.ingest").contains("status = failed (exit 2)"));

    let o = run(dir.path(), &format!("compounds = {}\ningest_strict = false\n", bad.display()), &["ingest"]);
    ok(&o);
    assert_eq!(csv_rows(&read(dir.path(), "rejected.csv")).len(), 1);

    let o = run(dir.path(), "colour = blue\n", &["ingest"]);
    assert_eq!(code(&o), 2);
}

/// Paracetamol and salicylic acid with arbitrary but distinct coordinates.
fn write_conformers(path: &Path) {
    let mols: Vec<_> = ["CC(=O)Nc1ccc(O)cc1", "O=C(O)c1ccccc1O"].iter().map(|s| parse_smiles(s).unwrap()).collect();
    let confs: Vec<Conformer> = mols
        .iter()
        .map(|m| {
            let pts = (0..m.atom_count())
                .map(|i| {
                    let t = i as f64;
                    [1.4 * t.cos() + 0.3 * t, 1.4 * t.sin(), 0.5 * (1.7 * t).sin()]
                })
                .collect();
            Conformer::new(pts).unwrap()
        })
        .collect();
    let records: Vec<_> = mols.iter().zip(&confs).collect();
    fs::write(path, write_sdf_v2000(&records)).unwrap();
}

fn train_config(dir: &Path, epochs: u64) -> String {
    let sdf = dir.join("conformers.sdf");
    write_conformers(&sdf);
    format!(
        "seed = 42\ntrain_set = {}\nligase_fasta = {}\ntrain_ligases = CRBN\nconformers = {}\n\
         hidden = 24\nseq_embed = 32\nfused = 16\nz_tree = 8\nz_graph = 8\n\
         epochs = {epochs}\nbatch_size = 20\nlr = 0.005\nlr_decay = 0.9\nlr_decay_every = 50\n",
        glue20().display(),
        fixture("ligases.fasta").display(),
        sdf.display()
    )
}

/// A 50-epoch run shared by the generate tests.
fn trained() -> &'static PathBuf {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        ok(&run(&dir, &train_config(&dir, 50), &["train"]));
        dir
    })
}

#[test]
fn train_log_contract() {
    let dir = trained();
    let rows = csv_rows(&read(dir, "train_log.csv"));
    assert_eq!(read(dir, "train_log.csv").lines().next().unwrap(), "epoch,total,kl,beta,wacc,tacc,sacc");
    assert_eq!(rows.len(), 50);
    let beta: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(beta.windows(2).all(|w| w[0] <= w[1]));
    let total: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(total[49] < total[0], "{} vs {}", total[49], total[0]);
    let svg = read(dir, "loss_curve.svg");
    assert_eq!(svg.matches(r#"class="point""#).count(), 50);
    for r in &rows {
        assert!(svg.contains(&format!(r#"data-epoch="{}" data-total="{}""#, r[0], r[1])));
    }
    assert!(read(dir, "MANIFEST.train").contains("2 with conformers"));
}

#[test]
fn resume_continues_bit_exactly() {
    let straight = tempfile::tempdir().unwrap();
    ok(&run(straight.path(), &train_config(straight.path(), 12), &["train"]));
    let split = tempfile::tempdir().unwrap();
    ok(&run(split.path(), &train_config(split.path(), 5), &["train"]));
    let cfg = train_config(split.path(), 12) + "resume = true\n";
    ok(&run(split.path(), &cfg, &["train"]));
    assert_eq!(read(straight.path(), "train_log.csv"), read(split.path(), "train_log.csv"));
    assert_eq!(
        fs::read(straight.path().join("out/model.ckpt")).unwrap(),
        fs::read(split.path().join("out/model.ckpt")).unwrap()
    );
    let missing = tempfile::tempdir().unwrap();
    let o = run(missing.path(), &(train_config(missing.path(), 3) + "resume = true\n"), &["train"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn non_finite_loss_exits_3_and_keeps_last_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = train_config(dir.path(), 20).replace("lr = 0.005", "lr = 1e300");
    let o = run(dir.path(), &cfg, &["train"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/model.ckpt").exists());
    assert!(read(dir.path(), "MANIFEST.train").contains("status = failed (exit 3)"));
}

fn generate_config(n: usize) -> String {
    let dir = trained();
    format!(
        "seed = 9\nligase_fasta = {}\ncheckpoint = {}\nsamples_per_ligase = {n}\n",
        fixture("ligases.fasta").display(),
        dir.join("out/model.ckpt").display()
    )
}

#[test]
fn generation_is_deterministic_and_valid() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&run(a.path(), &generate_config(5), &["generate"]));
    ok(&run(b.path(), &generate_config(5), &["generate"]));
    let text = read(a.path(), "samples.csv");
    assert_eq!(text, read(b.path(), "samples.csv"));
    assert_eq!(text.lines().next().unwrap(), "sample_id,ligase_id,smiles,status");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 15);
    for r in rows.iter().filter(|r| r[3] == "ok") {
        let m = parse_smiles(&r[2]).unwrap();
        assert!(check_valence(&m).ok, "{}", r[2]);
    }
    assert!(rows.iter().all(|r| ["ok", "no_valid_attachment", "sanitize_failed"].contains(&r[3].as_str())));
}

#[test]
fn generation_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("ligase_fasta = {}\ncheckpoint = {}\n", fixture("ligases.fasta").display(), dir.path().join("none.ckpt").display());
    assert_eq!(code(&run(dir.path(), &cfg, &["generate"])), 4);
    let cfg = generate_config(2) + "generate_ligases = VHL,KEAP1\n";
    assert_eq!(code(&run(dir.path(), &cfg, &["generate"])), 6);
}

#[test]
fn eval_counts_and_projection() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("samples = {}\ntraining_set = {}\n", fixture("samples_dupes.csv").display(), glue20().display());
    ok(&run(dir.path(), &cfg, &["eval"]));
    let report = read(dir.path(), "eval_report.csv");
    assert!(report.starts_with("# validity = valid / total; uniqueness = distinct valid / valid; novelty"));
    let rows = csv_rows(&report);
    let summary = &rows[0];
    assert_eq!(summary[0], "summary");
    // 8 rows, 6 valid, 4 distinct (ethanol twice, benzamide twice), paracetamol is in the training set
    assert_eq!(&summary[9..13], ["8", "6", "4", "3"]);
    assert_eq!(summary[14].parse::<f64>().unwrap(), 4.0 / 6.0);
    assert_eq!(rows.len(), 1 + 8);

    let proj = csv_rows(&read(dir.path(), "projection.csv"));
    assert_eq!(proj.len(), 20 + 4);
    let svg = read(dir.path(), "projection.svg");
    assert_eq!(svg.matches(r#"class="point""#).count(), proj.len());
    for p in &proj {
        assert!(svg.contains(&format!(r#"data-series="{}" data-x="{}" data-y="{}""#, p[1], p[2], p[3])));
    }
    let metrics = read(dir.path(), "eval_metrics.svg");
    assert!(metrics.contains(&format!(r#"data-metric="uniqueness" data-value="{}""#, summary[14])));

    let tsne = cfg.clone() + "projection_method = tsne\nperplexity = 5\ntsne_iterations = 200\n";
    ok(&run(dir.path(), &tsne, &["eval"]));
    let bad = cfg.clone() + "projection_method = tsne\nperplexity = 15\n";
    assert_eq!(code(&run(dir.path(), &bad, &["eval"])), 2);

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "sample_id,ligase_id,smiles,status\n").unwrap();
    let cfg = format!("samples = {}\ntraining_set = {}\n", empty.display(), glue20().display());
    assert_eq!(code(&run(dir.path(), &cfg, &["eval"])), 5);
}

#[test]
fn report_means_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("ligase_fasta = {}\n", fixture("ligases.fasta").display());
    let scores = fixture("scores_vhl_means.csv");
    ok(&run(dir.path(), &cfg, &["report", scores.to_str().unwrap()]));
    let means = csv_rows(&read(dir.path(), "score_means.csv"));
    let get = |design: &str, docked: &str| {
        means.iter().find(|r| r[0] == design && r[1] == docked).map(|r| r[3].clone()).unwrap()
    };
    assert_eq!(get("VHL", "VHL"), "-5.84");
    assert_eq!(get("VHL", "MDM2"), "-4.05");
    assert_eq!(get("VHL", "CRBN"), "-4.15");
    let svg = read(dir.path(), "heatmap.svg");
    assert_eq!(svg.matches(r#"class="cell""#).count(), 8 * 3);

    // permuted rows render the same grid
    let text = fs::read_to_string(&scores).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[1..].reverse();
    let permuted = dir.path().join("permuted.csv");
    fs::write(&permuted, lines.join("\n")).unwrap();
    ok(&run(dir.path(), &cfg, &["report", permuted.to_str().unwrap()]));
    assert_eq!(svg, read(dir.path(), "heatmap.svg"));

    let single = dir.path().join("single.csv");
    fs::write(&single, "compound_id,ligase,score\nx1,VHL,-6.5\n").unwrap();
    ok(&run(dir.path(), &cfg, &["report", single.to_str().unwrap()]));
    let svg = read(dir.path(), "heatmap.svg");
    assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
    assert!(svg.contains(r#"data-min="-6.5" data-max="-6.5""#) && !svg.contains("NaN"));

    let unknown = dir.path().join("unknown.csv");
    fs::write(&unknown, "compound_id,ligase,score\nx1,KEAP1,-6.5\n").unwrap();
    assert_eq!(code(&run(dir.path(), &cfg, &["report", unknown.to_str().unwrap()])), 6);
}
