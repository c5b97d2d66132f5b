use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shockloop_cli::{parse_config, run, ConfigError, Mode, RunError, SEED_ENV};

#[derive(Parser)]
#[command(
    name = "shockloop",
    about = "Boundary feedback experiments for scalar conservation laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed- or open-loop simulation.
    Simulate(Common),
    /// Grid of closed-loop runs over epsilon, nu and seeds.
    Sweep(Common),
    /// Mesh refinement against the front-tracking solution.
    Converge(Common),
    /// Random delay equations checked against the contraction estimate.
    VerifyDde(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn execute(modes: &[Mode], args: &Common) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| RunError::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if !modes.contains(&config.mode) {
        let wanted: Vec<&str> = modes.iter().map(|m| m.name()).collect();
        return Err(ConfigError::Validation(vec![format!(
            "mode `{}` does not belong to this subcommand (expected {})",
            config.mode.name(),
            wanted.join(" or ")
        )])
        .into());
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let seed = raw.trim().parse::<u64>().map_err(|_| {
            ConfigError::Validation(vec![format!(
                "{SEED_ENV} = `{raw}` is not an unsigned integer"
            )])
        })?;
        config.override_seed(seed);
    }
    run(&config, Path::new(&args.out), args.jobs.max(1))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (modes, args): (&[Mode], &Common) = match &cli.command {
        Command::Simulate(a) => (&[Mode::ClosedLoop, Mode::OpenLoop], a),
        Command::Sweep(a) => (&[Mode::Sweep], a),
        Command::Converge(a) => (&[Mode::ConvergenceStudy], a),
        Command::VerifyDde(a) => (&[Mode::DelayOdeVerify], a),
    };
    match execute(modes, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
