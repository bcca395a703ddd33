use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use wqed_cli::config::{parse_config_in, Mode};
use wqed_cli::{commands, output_base, OUTPUT_DIR_VAR};

/// Emitter population dynamics in a semi-infinite waveguide with delayed
/// feedback, driven by few-photon pulses.
#[derive(Parser)]
#[command(name = "wqed", version)]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario.
    Run { config: PathBuf },
    /// Steady state over a grid of pulse widths and delays.
    Sweep { config: PathBuf },
    /// Compare against the time-bin state-vector reference.
    Benchmark { config: PathBuf },
    /// Compare against closed forms or the feedback-free recursion.
    OracleCompare { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (mode, path) = match cli.command {
        Command::Run { config } => (Mode::Run, config),
        Command::Sweep { config } => (Mode::Sweep, config),
        Command::Benchmark { config } => (Mode::Benchmark, config),
        Command::OracleCompare { config } => (Mode::OracleCompare, config),
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(std::path::Path::new("."));
    let cfg = parse_config_in(&text, base, Some(mode)).map_err(|e| anyhow::anyhow!("{}:\n{e}", path.display()))?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let dir = std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from);
    let out = output_base(&path, cfg.output_path.as_deref(), dir.as_deref());
    let outcome = commands::execute(mode, &cfg, &out)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
