use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use covsteer::NoiseFamily;
use covsteer_cli::commands::{self, CliError, ExportProgram, SimulateOptions};
use covsteer_cli::config::{bundled, BUNDLED_NAMES};

/// Covariance steering for linear systems with multiplicative noise.
///
/// CONFIG is a TOML instance file, or `bundled:<name>` for one of the
/// bundled scenarios (example1, uav-relaxed, uav-exact).
#[derive(Parser)]
#[command(name = "covsteer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write report, policy and statistics.
    Solve {
        config: String,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Roll out a policy and write trajectories, statistics, validation and a plot.
    Simulate {
        config: String,
        #[arg(short, long)]
        policy: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Distribution of the multiplicative noise.
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// State coordinates to plot, e.g. `0,1`.
        #[arg(long, default_value = "0,1", value_parser = parse_axes)]
        axes: (usize, usize),
    },
    /// Write a program in sparse SDPA format.
    Export {
        config: String,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "relaxed")]
        program: Program,
    },
    /// Run a bundled scenario and print its checks.
    Reproduce {
        name: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print a bundled config.
    Config { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    GaussianUnit,
    UniformSqrt3,
    ThreePoint,
    Degenerate,
}

impl From<Family> for NoiseFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::GaussianUnit => NoiseFamily::GaussianUnit,
            Family::UniformSqrt3 => NoiseFamily::UniformSqrt3,
            Family::ThreePoint => NoiseFamily::ThreePoint,
            Family::Degenerate => NoiseFamily::Degenerate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Program {
    Relaxed,
    Step2,
}

fn parse_axes(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated indices")?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(a)?, p(b)?))
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Solve { config, out } => commands::cmd_solve(&config, &out),
        Command::Simulate {
            config,
            policy,
            out,
            samples,
            seed,
            family,
            axes,
        } => commands::cmd_simulate(
            &config,
            &policy,
            &out,
            &SimulateOptions {
                samples,
                seed,
                family: family.map(Into::into),
                axes,
            },
        ),
        Command::Export { config, out, program } => {
            let which = match program {
                Program::Relaxed => ExportProgram::Relaxed,
                Program::Step2 => ExportProgram::Step2,
            };
            commands::cmd_export(&config, &out, which)
        }
        Command::Reproduce { name, out } => commands::cmd_reproduce(&name, out.as_deref()),
        Command::Config { name } => bundled(&name)
            .map(str::to_string)
            .ok_or_else(|| CliError::Usage(format!("unknown bundled config {name:?}; known: {}", BUNDLED_NAMES.join(", ")))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
