use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqkd_cli::commands::{self, RunOptions};
use cvqkd_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(
    name = "cvqkd",
    version,
    about = "CV-QKD key rates under source intensity fluctuation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key rate versus distance (CSV).
    Scan(Args),
    /// Optimal case 2B cutoff versus distance (CSV).
    Optimize(Args),
    /// Monte Carlo cross-checks (text report; exit 3 on failure).
    Validate(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path`. Stdout when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo seed; overrides `mc.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Does not affect output.
    #[arg(long)]
    workers: Option<usize>,
}

fn write_out(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let fail = |e: std::io::Error| {
                CliError::Config(format!("cannot write {}: {e}", path.display()))
            };
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(fail)?;
            }
            std::fs::write(path, text).map_err(fail)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Scan(args) | Command::Optimize(args) | Command::Validate(args)) = &cli.command;
    let cfg = RunConfig::load(&args.config)?;
    let opts = RunOptions {
        seed: args.seed,
        workers: args.workers,
    };
    let out = args
        .out
        .as_deref()
        .or(cfg.output.as_ref().map(|o| o.path.as_path()));
    match cli.command {
        Command::Scan(_) => write_out(&commands::scan(&cfg, &opts)?, out),
        Command::Optimize(_) => write_out(&commands::optimize(&cfg, &opts)?, out),
        Command::Validate(_) => {
            let report = commands::validate(&cfg, &opts)?;
            write_out(&report.text, out)?;
            match report.failed() {
                0 => Ok(()),
                failed => Err(CliError::Validation { failed }),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("cvqkd: error kind=usage code=1 msg={first:?}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "cvqkd: error kind={} code={} msg={:?}",
                e.kind(),
                e.exit_code(),
                e.to_string()
            );
            ExitCode::from(e.exit_code())
        }
    }
}
