#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use thermoforge::ErrorClass;

use args::{Cli, Command};
use commands::Inputs;
use output::RunManifest;

const EXIT_DOMAIN: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn seed_override() -> Result<Option<u64>> {
    match std::env::var("THERMOFORGE_SEED") {
        Ok(s) => s.trim().parse().map(Some).with_context(|| format!("THERMOFORGE_SEED={s:?} is not a u64")),
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let mut inputs = Inputs::default();
    let mut seed = None;
    let mut passed = true;
    let artifact = match &cli.command {
        Command::Pressure(a) => commands::pressure_cmd(a, &mut inputs)?,
        Command::Fit1(a) => commands::fit1(a)?,
        Command::Fit2(a) => commands::fit2(a)?,
        Command::Table3(a) => commands::table3(a)?,
        Command::Rigidity(a) => commands::rigidity(a, &mut inputs)?,
        Command::Cltsim(a) => {
            let s = seed_override()?.unwrap_or(a.seed);
            seed = Some(s);
            commands::cltsim(a, s, &mut inputs)?
        }
        Command::Approx(a) => commands::approx(a, &mut inputs)?,
        Command::Selftest => {
            let (art, ok) = commands::selftest_cmd()?;
            passed = ok;
            art
        }
    };
    let flags = serde_json::to_value(cli)?;
    let subcommand = match &flags["command"] {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Object(m) => m.keys().next().cloned().unwrap_or_default(),
        _ => String::new(),
    };
    let manifest =
        RunManifest { subcommand, flags, inputs: inputs.digests, seed, version: env!("CARGO_PKG_VERSION").to_string() };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    output::write(&mut out, cli.out, &manifest, artifact)?;
    out.flush()?;
    Ok(passed)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<thermoforge::Error>().map(|e| e.class()) {
        Some(ErrorClass::Numeric) => EXIT_NUMERIC,
        _ => EXIT_DOMAIN,
    }
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || cause.downcast_ref::<serde_json::Error>().and_then(|j| j.io_error_kind())
                == Some(std::io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: selftest failed");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
