//! `heatobs`: kernel design, certification, co-simulation and gain sweeps
//! for the quasilinear heat-equation observer.
//!
//! Exit codes: 0 ok, 1 IO/config/model error, 2 infeasible certificate,
//! 3 unstable simulation or failed audit.

mod commands;
mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::{preset, Config, Model};

#[derive(Debug, Parser)]
#[command(name = "heatobs", version, about = "Backstepping observer design and certification for the quasilinear heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel CSV, gains CSV and kernel norms JSON.
    Kernel(Args),
    /// Certificate report (exit 2 when infeasible).
    Certify(Args),
    /// Plant/observer co-simulation with trajectory audit.
    Simulate(Args),
    /// Certified rate across a grid of decay gains.
    Sweep(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// JSON experiment configuration.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: linear, affine, affine-sweep, exponential, pcm.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Refine the kernel grid until the norms settle.
    #[arg(long)]
    refine: bool,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for randomised initial errors.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Model(heatobs::Error),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("simulation became unstable at t = {0}")]
    Unstable(f64),
    #[error("{0} audit check(s) failed")]
    Audit(usize),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Failure::Io { path: path.display().to_string(), source }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) | Failure::Io { .. } | Failure::Model(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Unstable(_) | Failure::Audit(_) => 3,
        }
    }
}

impl From<heatobs::Error> for Failure {
    fn from(e: heatobs::Error) -> Self {
        match e {
            heatobs::Error::Instability { time } => Failure::Unstable(time),
            e => Failure::Model(e),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (Command::Kernel(args) | Command::Certify(args) | Command::Simulate(args) | Command::Sweep(args)) = &cli.command;
    let cfg: Config = match (&args.config, &args.preset) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => unreachable!("clap requires one of --config, --preset"),
    };
    if args.workers == Some(0) {
        return Err(Failure::config("--workers must be at least 1"));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::io(&args.out, e))?;
    let ctx = Ctx {
        model: Model::build(&cfg.model)?,
        cfg,
        out: args.out.clone(),
        refine: args.refine,
        workers: args.workers,
        seed: args.seed,
    };
    match cli.command {
        Command::Kernel(_) => ctx.kernel(),
        Command::Certify(_) => ctx.certify(),
        Command::Simulate(_) => ctx.simulate(),
        Command::Sweep(_) => ctx.sweep(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("heatobs: {e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(heatobs::Error::Instability { time: 0.5 }).code(), 3);
        assert_eq!(Failure::from(heatobs::Error::Domain("x".into())).code(), 1);
        assert_eq!(Failure::Infeasible("x".into()).code(), 2);
        assert_eq!(Failure::Audit(2).code(), 3);
        assert_eq!(Failure::config("x").code(), 1);
    }
}
