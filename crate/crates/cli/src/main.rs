//! `lcglue`: ingest, train, generate, eval and report in one binary.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 bad config or input
//! schema, 3 non-finite training loss, 4 missing checkpoint, 5 empty sample
//! file, 6 unknown ligase.

mod cmd;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::Output;

pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_NON_FINITE: u8 = 3;
pub const EXIT_NO_CHECKPOINT: u8 = 4;
pub const EXIT_NO_SAMPLES: u8 = 5;
pub const EXIT_UNKNOWN_LIGASE: u8 = 6;

/// An error that maps to a specific exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub fn fail(code: u8, err: impl fmt::Display) -> anyhow::Error {
    Failure { code, message: err.to_string() }.into()
}

#[derive(Parser)]
#[command(name = "lcglue", version, about = "Ligase-conditioned junction-tree VAE pipeline for molecular glue design")]
struct Cli {
    /// Flat `key = value` run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (created if absent); overrides `out`
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a compound CSV, apply the ADMET windows and write summary tables
    Ingest,
    /// Preprocess the training set and train, or resume, a model
    Train,
    /// Sample molecules per ligase from a checkpoint
    Generate,
    /// Score a sample file and project it against the training set
    Eval,
    /// Cross-target heatmap and mean table from docking scores
    Report {
        /// Scores CSV (compound_id,ligase,score[,design_ligase]); overrides `scores`
        scores: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::Train => "train",
            Command::Generate => "generate",
            Command::Eval => "eval",
            Command::Report { .. } => "report",
        }
    }
}

fn setup(cli: &Cli) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| fail(EXIT_SCHEMA, format!("{e:#}")))?,
        None => RunConfig::empty(),
    };
    if let Some(s) = cli.seed {
        cfg.set("seed", s.to_string());
    }
    let out = match &cli.out {
        Some(p) => p.clone(),
        None => cfg.path("out").unwrap_or_else(|| PathBuf::from("lcglue_out")),
    };
    if let Command::Report { scores: Some(p) } = &cli.command {
        let abs = std::path::absolute(p)?;
        cfg.set("scores", abs.to_string_lossy().into_owned());
    }
    Ok((cfg, out))
}

fn dispatch(command: &Command, cfg: &RunConfig, out: &mut Output) -> Result<()> {
    match command {
        Command::Ingest => cmd::ingest::run(cfg, out),
        Command::Train => cmd::train::run(cfg, out),
        Command::Generate => cmd::generate::run(cfg, out),
        Command::Eval => cmd::eval::run(cfg, out),
        Command::Report { .. } => cmd::report::run(cfg, out),
    }
}

fn code_of(e: &anyhow::Error) -> u8 {
    e.downcast_ref::<Failure>().map_or(1, |f| f.code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, out_dir) = match setup(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(code_of(&e));
        }
    };
    let mut out = match Output::create(&out_dir, cli.command.name()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = dispatch(&cli.command, &cfg, &mut out);
    let (status, code) = match &result {
        Ok(()) => ("ok".to_string(), 0),
        Err(e) => (format!("failed (exit {}): {e:#}", code_of(e)), code_of(e)),
    };
    if let Err(e) = out.finish(&cfg, &status) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    if let Err(e) = result {
        eprintln!("error: {e:#}");
    }
    ExitCode::from(code)
}
