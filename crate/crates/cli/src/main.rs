//! `edpconv`: scenario runner for the edpconv toolkit.
//!
//! Exit codes: 0 on success, 1 on I/O errors, 2 on config errors and 3 on
//! numerical failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Scenario;
use error::RunError;
use output::Manifest;

#[derive(Debug, Parser)]
#[command(name = "edpconv", version, about = "Reproducible EDP-convergence scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario config and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "edpconv-out")]
        out: PathBuf,
        /// Worker threads; EDPCONV_THREADS takes precedence when set.
        #[arg(long)]
        threads: Option<usize>,
        /// Multiplies every solver tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
    },
    /// Print the scenario catalog.
    List,
    /// Parse a config without running it.
    Validate { config: PathBuf },
}

fn read_scenario(path: &Path) -> Result<(Scenario, Vec<u8>), RunError> {
    let bytes = fs::read(path).map_err(|e| RunError::config(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| RunError::config("config is not valid UTF-8"))?;
    Ok((Scenario::parse(text)?, bytes))
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, RunError> {
    match std::env::var("EDPCONV_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(RunError::config(format!("EDPCONV_THREADS must be a positive integer, got {s:?}"))),
        },
        Err(_) => match flag {
            Some(0) => Err(RunError::config("--threads must be positive")),
            other => Ok(other),
        },
    }
}

fn run(config: &Path, out: &Path, threads: Option<usize>, tolerance_scale: f64) -> Result<(), RunError> {
    let (scenario, bytes) = read_scenario(config)?;
    let pool = match thread_count(threads)? {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n),
        None => rayon::ThreadPoolBuilder::new(),
    }
    .build()
    .map_err(|e| RunError::config(format!("thread pool: {e}")))?;
    let outputs = pool.install(|| scenario::run(&scenario, tolerance_scale))?;
    let manifest = Manifest {
        kind: scenario.kind(),
        parameter_hash: output::sha256_hex(&bytes),
        version: env!("CARGO_PKG_VERSION"),
        anchor: config::anchor(scenario.kind()),
        tolerance_scale,
        files: vec![],
    };
    let written = output::write_all(out, &outputs, manifest)?;
    print!("{}", outputs.report);
    for name in written {
        println!("wrote {}", out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, threads, tolerance_scale } => run(&config, &out, threads, tolerance_scale),
        Command::List => {
            for (kind, anchor) in config::CATALOG {
                println!("{kind:<15} {anchor}");
            }
            Ok(())
        }
        Command::Validate { config } => read_scenario(&config).map(|(s, _)| println!("ok: {}", s.kind())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("edpconv: {e}");
            e.exit_code()
        }
    }
}
