use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vaulteq_cli::{run, CliError, Command, Config, Format, DEFAULT_SEED};

#[derive(Parser)]
#[command(
    name = "vaulteq",
    version,
    about = "Equilibrium, Monte Carlo and token-economy runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Equilibrium prices per regime, optionally along a population sweep.
    Equilibrium(RunArgs),
    /// Monte Carlo price moments against their analytic values.
    Convergence(RunArgs),
    /// Day-by-day token-economy simulation plus its event log.
    Tokenomics(RunArgs),
    /// Write the default configuration.
    Defaults {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Sub::Defaults { out } => std::fs::write(&out, Config::default().to_toml())
            .map(|_| format!("defaults -> {}", out.display()))
            .map_err(|source| CliError::Io { path: out, source }),
        Sub::Equilibrium(a) => run(Command::Equilibrium, &a.config, &a.out, a.seed, a.format),
        Sub::Convergence(a) => run(Command::Convergence, &a.config, &a.out, a.seed, a.format),
        Sub::Tokenomics(a) => run(Command::Tokenomics, &a.config, &a.out, a.seed, a.format),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
