mod args;
mod commands;
mod emit;
mod random;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("ASYM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("ASYM_THREADS must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err("ASYM_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let config = &cli.command;
    let outcome = match &cli.command {
        Command::Classify(a) => commands::classify(a, config),
        Command::Solve(a) => commands::solve(a, config),
        Command::Sweep(a) => commands::sweep(a, config),
        Command::Kernel(a) => commands::kernel(a, config),
        Command::Semiclassical(a) => commands::semiclassical(a, config),
        Command::Optimize(a) => commands::optimize(a, config),
        Command::Verify(a) => commands::verify(a, config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
