#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod chart;
mod commands;
mod error;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command};
use error::{exit_code, usage, EXIT_USAGE};

pub const THREADS_ENV: &str = "FRINGEBOS_THREADS";

/// `FRINGEBOS_THREADS` wins over `--threads`; 0 means one per core.
fn resolve_threads(flag: usize) -> Result<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            v.trim().parse::<usize>().map_err(|_| usage(format!("{THREADS_ENV}='{v}' is not a count")))?
        }
        _ => flag,
    };
    Ok(if n == 0 { std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) } else { n })
}

fn run(cli: Cli) -> Result<()> {
    let threads = resolve_threads(cli.threads)?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    let cmd = &cli.command;
    match cmd {
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Demodulate(a) => commands::demodulate(a)?,
        Command::Sweep(a) => commands::sweep(a)?,
        Command::SynthDiffusion(a) => commands::synth_diffusion(a)?,
        Command::FitDiffusion(a) => commands::fit_diffusion(a)?,
        Command::Parity(a) => commands::parity(a)?,
        Command::RandomWeights(a) => commands::random_weights(a)?,
    }
    commands::write_sidecar(cmd, threads, &commands::sidecar_path(cmd))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
