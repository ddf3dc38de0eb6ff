use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use hbcsense_core::{Error, ErrorCategory};

mod commands;
mod config;
mod output;

use commands::Ctx;

/// Body-capacitance + IMU activity recognition pipeline.
#[derive(Parser)]
#[command(name = "hbcsense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate sessions from the config's simulation source.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
    },
    /// Detrend and normalize sessions.
    Preprocess {
        #[arg(long)]
        config: PathBuf,
    },
    /// Window sessions and write the feature table.
    Featurize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit on every window and write the model.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-validate and write an evaluation report.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Count repetitions per annotated segment.
    Count {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-validate the pairwise collaboration task.
    PairEval {
        #[arg(long)]
        config: PathBuf,
    },
    /// Random-forest grid over trees and depth, scored by hamming loss.
    GridSearch {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render SVG plots from report JSON.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Report files; defaults to the reports in the output directory.
        #[arg(long)]
        input: Vec<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Config => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Numerical => 4,
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let category = match e.category() {
        ErrorCategory::Config => "config",
        ErrorCategory::Data => "data",
        ErrorCategory::Numerical => "numerical",
    };
    let mut body = json!({
        "kind": e.kind(),
        "category": category,
        "message": e.to_string(),
    });
    if let Error::Config { key, .. } = e {
        body["key"] = json!(key);
    }
    json!({ "error": body })
}

fn run(cmd: Command) -> hbcsense_core::Result<()> {
    let (config, action): (PathBuf, Box<dyn FnOnce(&mut Ctx) -> hbcsense_core::Result<()>>) = match cmd {
        Command::Simulate { config, seed } => (config, Box::new(move |c| commands::simulate(c, seed))),
        Command::Preprocess { config } => (config, Box::new(commands::preprocess)),
        Command::Featurize { config } => (config, Box::new(commands::featurize)),
        Command::Train { config } => (config, Box::new(commands::train)),
        Command::Evaluate { config } => (config, Box::new(commands::evaluate)),
        Command::Count { config } => (config, Box::new(commands::count)),
        Command::PairEval { config } => (config, Box::new(commands::pair_eval)),
        Command::GridSearch { config } => (config, Box::new(commands::grid)),
        Command::Report { config, input } => (config, Box::new(move |c| commands::report(c, &input))),
    };
    let mut ctx = Ctx::load(&config)?;
    action(&mut ctx)?;
    for f in ctx.out.written() {
        println!("{}", ctx.out.path(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
