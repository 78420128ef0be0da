mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load_tolerances, parse_toml, Command, ExperimentConfig, Inputs, Tolerances};
use output::Run;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files: exit 2.
    Config(String),
    /// Numerical breakdown or I/O failure: exit 3.
    Internal(String),
}

impl From<cuspgrowth::Error> for CliError {
    fn from(e: cuspgrowth::Error) -> Self {
        use cuspgrowth::Error::*;
        match e {
            InvalidParameter(_) | UnknownExample(_) | Inadmissible(_) | AboveCap { .. } | Specification(_)
            | Parse(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "cuspgrowth", version, about = "Volume growth experiments for manifolds with cusps")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Tolerance overrides (TOML).
    #[arg(long)]
    tolerances: Option<PathBuf>,
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Subcommand)]
enum Sub {
    /// Check monotonicity, convexity, curvature ratio and continuity of profiles.
    ProfileValidate(Common),
    /// Exponents, convergence and series of single cusps.
    CuspAnalyze(Common),
    /// Sparse/exotic/pinching taxonomy of a lattice description.
    LatticeClassify(Common),
    /// Run one of the example constructions and check its predicted growth.
    ExampleRun(Common),
    /// Exact counting checks on Γ(2).
    OracleVerify(Common),
    /// Run a config file.
    Run { config: PathBuf },
}

fn dispatch(
    command: Command,
    inputs: &Inputs,
    out: &Path,
    seed: u64,
    tol: &Tolerances,
) -> Result<bool, CliError> {
    let mut run = Run::new(out)?;
    match command {
        Command::ProfileValidate => commands::profile_validate(inputs, &mut run)?,
        Command::CuspAnalyze => commands::cusp_analyze(inputs, tol, &mut run)?,
        Command::LatticeClassify => commands::lattice_classify(inputs, tol, &mut run)?,
        Command::ExampleRun => commands::example_run(inputs, &mut run)?,
        Command::OracleVerify => commands::oracle_verify(inputs, seed, tol, &mut run)?,
    }
    run.finish(inputs.gnuplot)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let (command, c) = match cli.command {
        Sub::Run { config } => {
            let cfg: ExperimentConfig = parse_toml(&config)?;
            return dispatch(cfg.command, &cfg.inputs, &cfg.output_dir, cfg.seed, &cfg.tolerances);
        }
        Sub::ProfileValidate(c) => (Command::ProfileValidate, c),
        Sub::CuspAnalyze(c) => (Command::CuspAnalyze, c),
        Sub::LatticeClassify(c) => (Command::LatticeClassify, c),
        Sub::ExampleRun(c) => (Command::ExampleRun, c),
        Sub::OracleVerify(c) => (Command::OracleVerify, c),
    };
    let tol = load_tolerances(c.tolerances.as_deref())?;
    dispatch(command, &c.inputs, &c.out, c.seed, &tol)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
