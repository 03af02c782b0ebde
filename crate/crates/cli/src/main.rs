//! Command-line front end: equilibrium strategies, payoff curves, optimal
//! reserve rates, Monte Carlo comparisons and best-response certification.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 when the
//! model's assumptions fail (non-unique thresholds, failed certification).
//! Errors are reported as one JSON line on stderr.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coopetition::Execution;

use commands::{CurveArgs, EquilibriumArgs, OptimizeArgs, SimulateArgs, VerifyArgs};
use config::ConfigError;

#[derive(Debug, Parser)]
#[command(
    name = "coopetition",
    version,
    about = "LTE/Wi-Fi reverse auction engine"
)]
struct Cli {
    /// Worker threads (results do not depend on it); 0 uses every core.
    #[arg(long, global = true, env = "COOPETITION_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium bidding strategy at one reserve rate.
    Equilibrium(EquilibriumArgs),
    /// Provider's expected payoff over a grid of reserve rates (CSV).
    PayoffCurve(CurveArgs),
    /// Payoff-maximizing reserve rate (JSON).
    Optimize(OptimizeArgs),
    /// Auction against random coexistence, per replication (CSV) and summary (JSON).
    Simulate(SimulateArgs),
    /// Best-response certification of the equilibrium (JSON).
    Verify(VerifyArgs),
    /// Commands for markets with several LTE providers.
    #[command(subcommand)]
    MultiLte(MultiCommand),
}

#[derive(Debug, Subcommand)]
enum MultiCommand {
    /// Reserve rate maximizing provider 0's Monte Carlo payoff (JSON)
    Optimize(OptimizeArgs),
    /// Auction against random coexistence, per replication (CSV) and summary (JSON)
    Simulate(SimulateArgs),
    /// Provider 0's estimated payoff over a grid of reserve rates (CSV)
    PayoffCurve(CurveArgs),
}

fn execution(workers: Option<usize>) -> anyhow::Result<Execution> {
    match workers {
        None | Some(0) => Ok(Execution::Parallel),
        Some(1) => Ok(Execution::Sequential),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()?;
            Ok(Execution::Parallel)
        }
    }
}

fn require_multi(source: &commands::Source) -> anyhow::Result<()> {
    source.load()?.multi()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let exec = execution(cli.workers)?;
    match cli.command {
        Command::Equilibrium(a) => commands::equilibrium(&a),
        Command::PayoffCurve(a) => commands::payoff_curve_cmd(&a, exec),
        Command::Optimize(a) => commands::optimize(&a, exec),
        Command::Simulate(a) => commands::simulate(&a, exec),
        Command::Verify(a) => commands::verify(&a, exec),
        Command::MultiLte(MultiCommand::Optimize(a)) => {
            require_multi(&a.source)?;
            commands::optimize(&a, exec)
        }
        Command::MultiLte(MultiCommand::Simulate(a)) => {
            require_multi(&a.source)?;
            commands::simulate(&a, exec)
        }
        Command::MultiLte(MultiCommand::PayoffCurve(a)) => {
            require_multi(&a.source)?;
            commands::payoff_curve_cmd(&a, exec)
        }
    }
}

/// Exit status and error kind.
fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    if e.downcast_ref::<ConfigError>().is_some() {
        return (2, "invalid_config");
    }
    if let Some(err) = e.downcast_ref::<coopetition::Error>() {
        use coopetition::Error::*;
        let code = match err {
            InvalidDistribution(_) | InvalidConfig(_) | InvalidProfile(_) | InfeasibleBid(_) => 2,
            AssumptionViolated { .. }
            | NoBracket { .. }
            | NoRootInInterval { .. }
            | NonUnimodal { .. }
            | CertificationFailed { .. } => 3,
        };
        return (code, err.kind());
    }
    (1, "runtime")
}

fn report(kind: &str, message: &str) {
    let message = message
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    eprintln!(
        "{}",
        serde_json::json!({ "error": kind, "message": message })
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            report(kind, &format!("{e:#}"));
            ExitCode::from(code)
        }
    }
}
