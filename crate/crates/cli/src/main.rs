mod config;
mod error;
mod output;
mod run;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_config, Mode};
use error::{CliError, CliResult};
use validate::Status;

/// Rate-distortion and capacity-cost solver.
#[derive(Parser)]
#[command(name = "rdcc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a configured problem and write the results table.
    Solve(SolveArgs),
    /// Solve a configured problem and cross-check it against the oracles.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    /// Solve a single point at this loss instead of the configured mode.
    #[arg(long, allow_hyphen_values = true)]
    loss: Option<f64>,
    /// Number of sweep points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    no_deflation: bool,
}

fn solve_command(args: SolveArgs) -> CliResult<()> {
    let mut config = load_config(&args.config)?;
    if let Some(l) = args.loss {
        config.solve.mode = Mode::Point(l);
    }
    if let Some(n) = args.points {
        match &mut config.solve.mode {
            Mode::Sweep { n: points, .. } if n >= 2 => *points = n,
            _ => {
                return Err(CliError::Parse {
                    line: 0,
                    message: "--points needs a sweep with at least 2 points".into(),
                })
            }
        }
    }
    if args.out.is_some() {
        config.output.path = args.out;
    }
    if args.no_deflation {
        config.deflation.enabled = Some(false);
    }
    let workers = run::worker_count(&config, args.workers)?;
    let problem = config.problem.build()?;
    let rows = run::execute(&config, &problem, workers)?;
    output::emit(&problem, &rows, &config.output)
}

fn validate_command(path: PathBuf, workers: Option<usize>) -> CliResult<()> {
    let config = load_config(&path)?;
    let workers = run::worker_count(&config, workers)?;
    let problem = config.problem.build()?;
    let rows = run::execute(&config, &problem, workers)?;
    let options = run::solve_options(&config, &problem);
    let checks = validate::run_checks(&config, &problem, &options, &rows);
    for c in &checks {
        println!("{}", c.line());
    }
    match checks.iter().filter(|c| c.status == Status::Fail).count() {
        0 => Ok(()),
        n => Err(CliError::ValidationFailed(n)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(args) => solve_command(args),
        Command::Validate { config, workers } => validate_command(config, workers),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
