//! `emoaug`: run one pipeline stage of an augmentation experiment.
//!
//! Exit status: 0 success, 1 invalid input (config, manifests, stage order),
//! 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emoaug_core::config::ExperimentConfig;
use emoaug_core::pipeline::{Stage, Workspace, OUTPUT_ROOT_ENV};
use emoaug_core::Error;

#[derive(Debug, Parser)]
#[command(name = "emoaug", version, about = "Mel-spectrogram augmentation experiments for speech emotion recognition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract or generate features and write the fold splits.
    Features(StageArgs),
    /// Train one augmentor per fold and system.
    TrainAug(StageArgs),
    /// Materialize hybrid training sets with augmented copies.
    Augment(StageArgs),
    /// Train the segment classifiers on the hybrid sets.
    TrainSer(StageArgs),
    /// Score the classifiers on the held-out splits.
    Eval(StageArgs),
    /// Embed original and augmented representations with t-SNE.
    Tsne(StageArgs),
    /// Aggregate evaluation reports into result tables.
    Report(StageArgs),
}

#[derive(Debug, Args)]
struct StageArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved plan and write nothing.
    #[arg(long)]
    dry_run: bool,
}

impl Command {
    fn split(self) -> (Stage, StageArgs) {
        match self {
            Command::Features(a) => (Stage::Features, a),
            Command::TrainAug(a) => (Stage::TrainAug, a),
            Command::Augment(a) => (Stage::Augment, a),
            Command::TrainSer(a) => (Stage::TrainSer, a),
            Command::Eval(a) => (Stage::Eval, a),
            Command::Tsne(a) => (Stage::Tsne, a),
            Command::Report(a) => (Stage::Report, a),
        }
    }
}

fn run(stage: Stage, args: StageArgs) -> Result<(), Error> {
    if !args.config.is_file() {
        return Err(Error::Config(format!("config file not found: {}", args.config.display())));
    }
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let ws = Workspace::from_env(config)?;
    if args.dry_run {
        println!("dry run ({OUTPUT_ROOT_ENV} overrides the output root)");
        for line in ws.plan(stage) {
            println!("{line}");
        }
        return Ok(());
    }
    let files = ws.run(stage, &mut |msg| log::info!("{msg}"))?;
    println!("{stage}: wrote {} files under {}", files.len(), ws.root.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (stage, args) = cli.command.split();
    match run(stage, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
