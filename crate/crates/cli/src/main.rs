//! `grbb`: run balls-into-bins experiments and write JSON/CSV reports.
//!
//! Exit status is 0 when every hard check passes, 1 when a check fails or
//! the queue is unstable, and 2 for usage, configuration or I/O errors.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{merge, parse_config_text, resolve, Command, ConfigError};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "grbb", version, about = "Repeated balls-into-bins experiments")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Simulate one trajectory of the finite process.
    #[command(
        after_help = "Required: --law, --L, --N. Defaults: --T 100. The initial state is drawn from the law itself."
    )]
    Simulate(Flags),
    /// Sweep L and measure how far the empirical measure strays from the nonlinear trajectory.
    #[command(
        after_help = "Defaults: --law mb, --L 128,256,512,1024, --T 20, --delta 0.05, --replicas 2000, --init bernoulli:0.5."
    )]
    Chaos(Flags),
    /// Compare exact two-site gaps with their bounds on a grid of L.
    #[command(after_help = "Required: --law, --L.")]
    TvCheck(Flags),
    /// Check a coupling construction by Monte Carlo.
    #[command(after_help = "Required: --law (mb or be), --L, --N. Defaults: --samples 1000000.")]
    CouplingTest(Flags),
    /// Hitting time and mixing bound of the Fermi-Dirac chain from a concentrated start.
    #[command(after_help = "Required: --L, --N. Defaults: --law fd, --replicas 500.")]
    Mixing(Flags),
    /// Stationary law of the single-server queue with the given arrivals.
    #[command(after_help = "Required: --arrival. Optional: --lambda for drift constants.")]
    Stationary(Flags),
    /// Fixed point of the measure recursion with mean r.
    #[command(after_help = "Required: --law, --r.")]
    FixedPoint(Flags),
    /// Convergence of the measure recursion from Bernoulli(r).
    #[command(after_help = "Required: --law, --r. Defaults: --T 10000.")]
    Equilibrium(Flags),
}

/// Flags shared by every subcommand. Each subcommand rejects flags it does
/// not use.
#[derive(Args, Debug, Default)]
struct Flags {
    /// Reassignment law: fd, mb or be.
    #[arg(long)]
    law: Option<String>,
    /// Number of bins: a single value, a list `a,b,c` or a range `a..b[:step]`.
    #[arg(long = "L", value_name = "L")]
    l: Option<String>,
    /// Number of balls.
    #[arg(long = "N", value_name = "N")]
    n: Option<String>,
    /// Time horizon.
    #[arg(long = "T", value_name = "T")]
    t: Option<String>,
    /// Deviation threshold for exceedance frequencies.
    #[arg(long)]
    delta: Option<String>,
    /// Independent replicas per point.
    #[arg(long)]
    replicas: Option<String>,
    /// Target mean of the fixed point, in [0, 1).
    #[arg(long)]
    r: Option<String>,
    /// Exponent for the queue drift constants.
    #[arg(long)]
    lambda: Option<String>,
    /// Monte Carlo samples.
    #[arg(long)]
    samples: Option<String>,
    /// Arrival law: bernoulli:a, poisson:a, geometric:s, dirac:k or pmf:m0,m1,...
    #[arg(long)]
    arrival: Option<String>,
    /// Initial site law for chaos, same syntax as --arrival.
    #[arg(long)]
    init: Option<String>,
    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<String>,
    /// Report path stem; `.json` and/or `.csv` is appended. Nothing is written when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format: json, csv or both [default: both].
    #[arg(long)]
    format: Option<String>,
    /// Config file of `key = value` lines with optional `[command]` sections; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validate the configuration and print the resolved plan without running it.
    #[arg(long)]
    dry_run: bool,
}

impl Flags {
    fn into_map(self) -> BTreeMap<String, String> {
        let pairs = [
            ("law", self.law),
            ("L", self.l),
            ("N", self.n),
            ("T", self.t),
            ("delta", self.delta),
            ("replicas", self.replicas),
            ("r", self.r),
            ("lambda", self.lambda),
            ("samples", self.samples),
            ("arrival", self.arrival),
            ("init", self.init),
            ("seed", self.seed),
            ("output", self.output.map(|p| p.display().to_string())),
            ("format", self.format),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }
}

fn split(sub: Sub) -> (Command, Flags) {
    match sub {
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Chaos(f) => (Command::Chaos, f),
        Sub::TvCheck(f) => (Command::TvCheck, f),
        Sub::CouplingTest(f) => (Command::CouplingTest, f),
        Sub::Mixing(f) => (Command::Mixing, f),
        Sub::Stationary(f) => (Command::Stationary, f),
        Sub::FixedPoint(f) => (Command::FixedPoint, f),
        Sub::Equilibrium(f) => (Command::Equilibrium, f),
    }
}

fn load(command: Command, mut flags: Flags) -> Result<(config::RunConfig, bool), String> {
    let file = match flags.config.take() {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            Some(parse_config_text(&text).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    let dry_run = flags.dry_run;
    let merged = merge(command, file.as_ref(), flags.into_map()).map_err(|e: ConfigError| e.to_string())?;
    let cfg = resolve(command, &merged).map_err(|e| e.to_string())?;
    Ok((cfg, dry_run))
}

// A closed pipe (`grbb ... | head`) is not an error worth a panic.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = split(cli.command);
    let (cfg, dry_run) = match load(command, flags) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("grbb {command}: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if dry_run {
        emit(&serde_json::to_string_pretty(&cfg).expect("plan serializes"));
        return ExitCode::SUCCESS;
    }
    match commands::run(&cfg) {
        Ok(report) => {
            emit(&report.summary());
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                for c in report.failed_checks() {
                    eprintln!("failed: {} ({} vs {})", c.name, c.estimate, c.bound);
                }
                ExitCode::from(EXIT_FAIL)
            }
        }
        Err(commands::RunError::Core(e @ grbb_core::Error::UnstableQueue { .. })) => {
            eprintln!("grbb {command}: {e}");
            ExitCode::from(EXIT_FAIL)
        }
        Err(e) => {
            eprintln!("grbb {command}: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
