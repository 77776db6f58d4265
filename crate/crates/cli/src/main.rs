use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magflow_cli::{run, CliError, Experiment};

#[derive(Parser)]
#[command(name = "magflow", version, about = "Magnetic flows on surfaces: orbits, Jacobi fields, scattering and closure")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for grid sweeps.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Seed for sampled tests; overrides `seed` in the config.
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate one orbit.
    Trace,
    /// Exit event of one boundary entry.
    Exit,
    /// Scattering table over the boundary grid.
    Scatter,
    /// Jacobi field along one orbit.
    Jacobi,
    /// First conjugate points for a fan of directions.
    Conjugates,
    /// Index form value, Gram spectrum and sweeps.
    Index,
    /// Magnetic convexity margin of the domain boundary.
    Convexity,
    /// Simplicity verdict for the domain.
    Simplicity,
    /// Closure and pass-count census.
    Closure,
    /// Compare scattering of two systems.
    CompareScatter,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Trace => Experiment::Trace,
            Command::Exit => Experiment::Exit,
            Command::Scatter => Experiment::Scatter,
            Command::Jacobi => Experiment::Jacobi,
            Command::Conjugates => Experiment::Conjugates,
            Command::Index => Experiment::Index,
            Command::Convexity => Experiment::Convexity,
            Command::Simplicity => Experiment::Simplicity,
            Command::Closure => Experiment::Closure,
            Command::CompareScatter => Experiment::CompareScatter,
        }
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        return fail(&CliError::Config(vec![magflow_cli::Violation {
            key: "--config".into(),
            message: "a config file is required".into(),
        }]));
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(&CliError::Config(vec![magflow_cli::Violation {
                key: "--threads".into(),
                message: "must be at least 1".into(),
            }]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    match run(cli.command.into(), &config, cli.out.as_deref(), cli.seed) {
        Ok(outcome) => {
            println!("{}", outcome.artifacts.summary_line);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
