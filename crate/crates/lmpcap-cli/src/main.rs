//! Command-line front end for dispatch cases: solve them, print their
//! duals, audit optimality conditions, and sweep a price cap over a range.
//!
//! Exit codes: 0 when every requested solve is optimal (and every audit
//! passes), 1 for usage, file, or construction errors, 2 when a solve ends
//! anywhere but `Optimal` or an audit fails.

mod check;
mod dual;
mod render;
mod solve;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::error::ErrorKind;
use clap::{ArgGroup, Parser, Subcommand};
use lmpcap::model::BusCap;
use lmpcap::SolverOptions;

#[derive(Parser)]
#[command(
    name = "lmpcap",
    version,
    about = "Economic dispatch with hard caps on locational marginal prices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Machine-readable JSON on stdout instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Solver tolerance in (0, 1e-2]; defaults to 1e-8 (1e-10 for `check`).
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Solver iteration budget.
    #[arg(long, global = true, default_value_t = 200, value_name = "INT")]
    max_iter: usize,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1, value_name = "INT")]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a case and print prices, dispatch, and cap outcomes.
    Solve {
        /// Case file (JSON).
        case: PathBuf,
        /// Cap a bus price, repeatable; overrides the file's cap for that bus.
        #[arg(long = "cap", value_name = "BUS=PRICE", value_parser = parse_cap)]
        caps: Vec<BusCap>,
    },
    /// Print the dual of a case, and optionally solve it.
    #[command(group(ArgGroup::new("form").required(true).args(["lp", "explicit"])))]
    Dual {
        /// Case file (JSON).
        case: PathBuf,
        /// Linear dual with one multiplier per row (linear programs only).
        #[arg(long)]
        lp: bool,
        /// Closed-form dual (strictly convex programs only).
        #[arg(long)]
        explicit: bool,
        /// Also solve both sides and report the duality gap.
        #[arg(long)]
        solve: bool,
    },
    /// Solve a case and audit the solution against its optimality conditions.
    Check {
        /// Case file (JSON).
        case: PathBuf,
        /// Cap a bus price, repeatable; overrides the file's cap for that bus.
        #[arg(long = "cap", value_name = "BUS=PRICE", value_parser = parse_cap)]
        caps: Vec<BusCap>,
    },
    /// Sweep one bus's price cap over a range and emit CSV.
    Sweep {
        /// Case file (JSON).
        case: PathBuf,
        /// Bus whose cap is swept.
        #[arg(long)]
        bus: String,
        /// First cap value.
        #[arg(long)]
        from: f64,
        /// Last cap value.
        #[arg(long)]
        to: f64,
        /// Number of evenly spaced cap values, at least 2.
        #[arg(long)]
        steps: usize,
    },
}

/// Parse a `--cap` argument of the form `BUS=PRICE`.
fn parse_cap(s: &str) -> Result<BusCap, String> {
    let (bus, price) = s
        .split_once('=')
        .ok_or_else(|| format!("expected BUS=PRICE, got {s:?}"))?;
    if bus.is_empty() {
        return Err(format!("empty bus name in {s:?}"));
    }
    let price: f64 = price
        .parse()
        .map_err(|e| format!("bad price in {s:?}: {e}"))?;
    Ok(BusCap {
        bus: bus.to_string(),
        price,
    })
}

/// Validate `--tol`/`--max-iter` before handing them to the solver, so bad
/// values exit 1 with a message instead of panicking.
fn solver_options(tol: f64, max_iter: usize) -> Result<SolverOptions> {
    if !(tol.is_finite() && tol > 0.0 && tol <= 1e-2) {
        bail!("--tol must lie in (0, 1e-2], got {tol}");
    }
    if max_iter == 0 {
        bail!("--max-iter must be at least 1");
    }
    Ok(SolverOptions {
        tolerance: tol,
        max_iterations: max_iter,
        ..SolverOptions::default()
    })
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if cli.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    // `check` differences objectives over a 1e-5 step, so its default
    // tolerance is two orders tighter than the plain solve default.
    let default_tol = match cli.command {
        Command::Check { .. } => 1e-10,
        _ => 1e-8,
    };
    let opts = solver_options(cli.tol.unwrap_or(default_tol), cli.max_iter)?;
    match &cli.command {
        Command::Solve { case, caps } => solve::run(case, caps, &opts, cli.json),
        Command::Dual {
            case,
            lp,
            explicit: _,
            solve,
        } => dual::run(case, *lp, *solve, &opts, cli.json),
        Command::Check { case, caps } => check::run(case, caps, &opts, cli.json),
        Command::Sweep {
            case,
            bus,
            from,
            to,
            steps,
        } => sweep::run(case, bus, *from, *to, *steps, &opts, cli.jobs, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            err.print().expect("writing diagnostics");
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
