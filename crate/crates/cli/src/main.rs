mod cache;
mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Context;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Sink;

/// Correlations of multiplicative functions over F_q[x].
#[derive(Parser)]
#[command(name = "fqcorr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the merged configuration to this path.
    #[arg(long)]
    write_config: Option<PathBuf>,
    #[command(flatten)]
    cfg: ExperimentConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Build and cache the irreducible table, checking the necklace identity.
    Sieve(Common),
    /// Factor polynomials given as arguments.
    Factor {
        #[command(flatten)]
        common: Common,
        polys: Vec<String>,
    },
    /// Correlation sum of two multiplicative functions, with its main term.
    Correlate(Common),
    /// Main term alone, at a finite or infinite horizon.
    Mainterm(Common),
    /// Deviation series for the truncated Liouville function.
    Chowla(Common),
    /// Distribution of a sum of shifted additive functions.
    Dist(Common),
    /// Empirical and limiting characteristic functions.
    Charfn(Common),
    /// Shifted Turán–Kubilius ratio.
    Tk(Common),
    /// Sieve statistics for irreducibles.
    Diagnostics(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Factor { common, .. } => common,
            Command::Sieve(c)
            | Command::Correlate(c)
            | Command::Mainterm(c)
            | Command::Chowla(c)
            | Command::Dist(c)
            | Command::Charfn(c)
            | Command::Tk(c)
            | Command::Diagnostics(c) => c,
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    let common = command.common();
    let file = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let cache_dir = cache::resolve_dir(common.cfg.cache_dir.as_deref(), file.cache_dir.as_deref());
    let cfg = file.merge(common.cfg.clone());
    cfg.check_files()?;
    if let Some(path) = &common.write_config {
        std::fs::write(path, cfg.format())?;
    }
    let ctx = Context {
        cfg: &cfg,
        cache_dir: &cache_dir,
        sink: Sink::new(cfg.out.as_deref()),
    };
    match command {
        Command::Sieve(_) => commands::sieve(&ctx),
        Command::Factor { polys, .. } => commands::factor(&ctx, polys),
        Command::Correlate(_) => commands::correlate_cmd(&ctx),
        Command::Mainterm(_) => commands::mainterm(&ctx),
        Command::Chowla(_) => commands::chowla(&ctx),
        Command::Dist(_) => commands::dist(&ctx),
        Command::Charfn(_) => commands::charfn(&ctx),
        Command::Tk(_) => commands::tk(&ctx),
        Command::Diagnostics(_) => commands::diagnostics(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
