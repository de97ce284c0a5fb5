use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cplab::cli::{run, Command};
use cplab::config::{Format, Overrides, RunConfig};
use cplab::error::{Error, Result};

#[derive(Parser)]
#[command(name = "cplab", version, about = "Spin dissipation from stochastic fields")]
struct Args {
    #[command(subcommand)]
    command: Sub,
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<u32>,
    #[arg(long, global = true)]
    no_lamb_shift: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Markov matrices, generator parameters and positivity verdict
    Generator,
    /// Time series of the evolved state
    Evolve,
    /// CHSH correlators and their combination over time
    Chsh,
    /// One correlator over time
    Correlator {
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Spin axis as three comma-separated components
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [0.0, 0.0, 1.0])]
        n: Vec<f64>,
    },
    /// Simulated tomography record and reconstruction
    Tomography,
    /// Monte Carlo check of the master equation
    Oracle,
    /// First-order propagator against the exact one
    Perturbative,
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("CPLAB_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("CPLAB_THREADS must be a positive integer (got {v:?})"))),
        },
        Err(_) => Ok(None),
    }
}

fn execute(args: Args) -> Result<i32> {
    let path = args
        .config
        .ok_or_else(|| Error::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    cfg.apply(&Overrides {
        out: args.out,
        format: args.format,
        seed: args.seed,
        horizon: args.horizon,
        steps: args.steps,
        no_lamb_shift: args.no_lamb_shift,
    })?;
    let command = match args.command {
        Sub::Generator => Command::Generator,
        Sub::Evolve => Command::Evolve,
        Sub::Chsh => Command::Chsh,
        Sub::Correlator { theta, phi, n } => Command::Correlator {
            theta,
            phi,
            n: n.try_into()
                .map_err(|v: Vec<f64>| Error::Config(format!("--n needs 3 components, got {}", v.len())))?,
        },
        Sub::Tomography => Command::Tomography,
        Sub::Oracle => Command::Oracle,
        Sub::Perturbative => Command::Perturbative,
    };
    let outcome = run(&command, &cfg, threads_from_env()?)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.output.path {
        Some(p) => std::fs::write(p, &outcome.text)?,
        None => std::io::stdout().write_all(outcome.text.as_bytes())?,
    }
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
