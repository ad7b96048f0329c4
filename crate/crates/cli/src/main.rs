//! `refgame`: dataset generation, training, evaluation, robustness runs,
//! lexicon inspection and drop-coding benchmarks from one config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use refgame_core::pipeline::{Pipeline, RunConfig, Stage};

#[derive(Parser)]
#[command(name = "refgame", version, about = "Referential games with pragmatic reasoning")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Global seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Generate the train/test object split.
    GenData,
    /// Train speaker and listener priors.
    Train,
    /// Evaluate every configured method on both subsets.
    Eval,
    /// Distill virtual opponent models and compare against exact copies.
    Virtual,
    /// Compare the lexicons of two methods.
    Lexicon,
    /// Drop-coding benchmark.
    Dropsim,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Self {
        match c {
            Command::GenData => Stage::GenData,
            Command::Train => Stage::Train,
            Command::Eval => Stage::Eval,
            Command::Virtual => Stage::Virtual,
            Command::Lexicon => Stage::Lexicon,
            Command::Dropsim => Stage::Dropsim,
        }
    }
}

fn run(cli: &Cli) -> refgame_core::Result<Vec<PathBuf>> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Pipeline::new(config)?.run(cli.command.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
