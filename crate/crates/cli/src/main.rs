use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use nls_normalized_cli::config::{defaults_toml, parse_config, Command, Overrides};
use nls_normalized_cli::run::{run, EXIT_ERROR};

/// Normalized ground states of a linearly coupled pair of Schrödinger equations.
///
/// Commands: oracle, solve, sweep, threshold, check. The command may also be set
/// by `command = "..."` in the configuration file.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Overrides `command` in the configuration.
    command: Option<Command>,
    /// TOML configuration; absent keys take the values printed by --show-defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for sweep entries.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Seed of the initial state; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the defaults table and exit.
    #[arg(long)]
    show_defaults: bool,
    /// Write the artifact here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main_inner(cli: Cli) -> Result<i32> {
    if cli.show_defaults {
        print!("{}", defaults_toml());
        return Ok(0);
    }
    if cli.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let overrides = Overrides {
        command: cli.command,
        seed: cli.seed,
        output: cli.output,
    };
    let cfg = parse_config(&text, &overrides)?;
    let outcome = run(&cfg, cli.jobs)?;
    match &cfg.path {
        Some(path) => fs::write(path, &outcome.output).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&outcome.output).context("writing standard output")?,
    }
    if let Some(note) = &outcome.note {
        eprintln!("{note}");
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
