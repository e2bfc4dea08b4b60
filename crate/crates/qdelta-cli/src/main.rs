use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdelta_cli::{commands, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "qdelta", version, about = "Weighted lattice point counts on ternary quadrics F(x) = m0 N")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// instance and parameter file (flat `key = value`)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// zero wall-clock fields so identical configs give byte-identical files
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// enumerate Γ_w(N) directly
    Count,
    /// tabulate S̃_q(c)
    Expsum,
    /// local densities and the singular series
    Density,
    /// deviation of the delta expansion from the indicator of n = 0
    DeltaCheck,
    /// enumeration, Poisson side and main-term predictions over h
    Compare,
    /// validate every CSV table in --out against its schema
    CheckCsv,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Command::CheckCsv = cli.command {
        for (path, rows) in commands::check_dir(&cli.out)? {
            println!("{path}: {rows} rows ok");
        }
        return Ok(());
    }
    let config = cli.config.ok_or_else(|| qdelta::Error::Config("--config is required".into()))?;
    let run = RunConfig::load(config, cli.out, cli.threads, cli.deterministic)?;
    if let Some(n) = run.threads {
        // only fails when a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Count => commands::cmd_count(&run),
        Command::Expsum => commands::cmd_expsum(&run),
        Command::Density => commands::cmd_density(&run),
        Command::DeltaCheck => commands::cmd_delta_check(&run),
        Command::Compare => commands::cmd_compare(&run),
        Command::CheckCsv => unreachable!(),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
