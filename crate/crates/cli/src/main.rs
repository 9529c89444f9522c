use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod evaluate;
mod ingest;
mod mask;
mod merge;
mod output;
mod profile;
mod shared;

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "idiolect",
    version,
    about = "Author-style corpus, profiling and adapter toolkit"
)]
struct Cli {
    /// Seed for every random choice [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON run configuration; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Chunk a corpus into book-disjoint splits and build prompts and recipes
    Ingest(ingest::Args),
    /// Compute style profiles for author references and generations
    Profile(profile::Args),
    /// Write loss-masked training examples
    Mask(mask::Args),
    /// Merge LoRA adapters by block concatenation
    Merge(merge::Args),
    /// Compare generation profiles with references
    Evaluate(evaluate::Args),
    /// Re-render CSV and SVG from a report JSON
    Report(evaluate::ReportArgs),
}

/// Failure caused by the user's inputs or configuration (exit code 2).
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(message: impl Into<String>) -> anyhow::Error {
    InputError(message.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<idiolect::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return if e.kind() == std::io::ErrorKind::NotFound { 2 } else { 1 };
        }
    }
    1
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(idiolect::seed::DEFAULT_SEED);
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = shared::Context { seed, out, config };
    match cli.command {
        Command::Ingest(args) => ingest::run(&ctx, args),
        Command::Profile(args) => profile::run(&ctx, args),
        Command::Mask(args) => mask::run(&ctx, args),
        Command::Merge(args) => merge::run(&ctx, args),
        Command::Evaluate(args) => evaluate::run(&ctx, args),
        Command::Report(args) => evaluate::run_report(&ctx, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
