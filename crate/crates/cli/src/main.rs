use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use loewner_cli::{run, Command, RunConfig, EXIT_INPUT};

/// Loewner equation solver and verifier.
///
/// Exit codes: 0 pass, 1 verification failure, 2 advisory only, 3 input error.
#[derive(Parser, Debug)]
#[command(name = "loewner", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration (optional for `demo`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for pair sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Verification tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => match RunConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(EXIT_INPUT as u8);
            }
        },
        (None, Command::Demo) => RunConfig::demo(),
        (None, _) => {
            eprintln!("--config is required for this command");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.tol.is_some() {
        cfg.tol = cli.tol;
    }
    let outcome = run(cli.command, &cfg, &cli.out);
    if outcome.code == EXIT_INPUT {
        eprintln!("{}", outcome.summary);
    } else {
        println!("{}", outcome.summary);
    }
    ExitCode::from(outcome.code as u8)
}
