use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use multibump::harness::{self, parse_config, Subcommand, CONFIG_KEYS, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    GroundState,
    Constants,
    Energy,
    Fit,
    Reduce,
    Sweep,
    Residual,
    Verify,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::GroundState => Subcommand::GroundState,
            Command::Constants => Subcommand::Constants,
            Command::Energy => Subcommand::Energy,
            Command::Fit => Subcommand::Fit,
            Command::Reduce => Subcommand::Reduce,
            Command::Sweep => Subcommand::Sweep,
            Command::Residual => Subcommand::Residual,
            Command::Verify => Subcommand::Verify,
        }
    }
}

/// Multi-bump ansatz energies, expansion fits and reduced critical points.
///
/// Exit codes: 0 success, 1 usage or config error, 2 numerical failure, 3 acceptance failure.
#[derive(Debug, Parser)]
#[command(name = "multibump", version, after_long_help = CONFIG_KEYS)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomly drawn test points; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { code(EXIT_USAGE) } else { code(EXIT_OK) };
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", cli.config.display());
            return code(EXIT_USAGE);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return code(harness::exit_code(&e));
        }
    };
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let cmd = Subcommand::from(cli.command);
    match harness::run_with_progress(cmd, &cfg, &mut |t| println!("{}", t.line())) {
        Ok(report) => {
            for path in &report.artifacts {
                println!("wrote {}", path.display());
            }
            code(report.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            code(e.exit_code())
        }
    }
}
