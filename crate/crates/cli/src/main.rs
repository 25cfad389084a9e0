//! `ocean-bvp`: solve the western-boundary-layer model with shooting,
//! free-boundary or quasi-uniform-grid methods, reproduce the comparison
//! tables, and sweep the nonlinearity parameter.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bvp_core::driver::{self, Method, RunConfig, RunError};
use bvp_core::exec;
use bvp_core::model::BcKind;
use bvp_core::output::{self, OutputFormat};
use bvp_core::reference::Group;
use bvp_core::tables;
use clap::{Args, Parser, Subcommand};

const THREADS_ENV: &str = "BVP_SEED_THREADS";

#[derive(Parser)]
#[command(name = "ocean-bvp", version, about = "Solvers for the nonlinear western boundary layer BVP on [0, inf)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and print its report.
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reproduce both comparison tables at b = 2.
    Tables {
        /// Comma-separated groups to leave out: shooting, fbf, qug.
        #[arg(long, value_delimiter = ',')]
        skip: Vec<Group>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve for a list of b values, warm-starting in the given order.
    Sweep {
        #[command(flatten)]
        solver: SolverArgs,
        /// b values (repeat the flag or separate with commas).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        b: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve and write the profile as xi,u,du,d2u CSV.
    Profile {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "shoot-newton")]
    method: Method,
    #[arg(long = "bc", default_value = "no-slip")]
    kind: BcKind,
    /// First shooting seed (also the Newton start).
    #[arg(long, allow_negative_numbers = true)]
    beta0: Option<f64>,
    /// Second secant seed.
    #[arg(long, allow_negative_numbers = true)]
    beta1: Option<f64>,
    /// Truncated boundary for shooting.
    #[arg(long)]
    xi_inf: Option<f64>,
    /// Free-boundary slope; repeat for a continuation sequence.
    #[arg(long)]
    eps: Vec<f64>,
    /// Number of grid intervals.
    #[arg(long = "J")]
    intervals: Option<usize>,
    /// Scale of the quasi-uniform map.
    #[arg(long)]
    c: Option<f64>,
    /// Convergence tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl SolverArgs {
    fn config(&self, b: f64) -> RunConfig {
        RunConfig {
            method: self.method,
            kind: self.kind,
            b,
            beta0: self.beta0,
            beta1: self.beta1,
            xi_inf: self.xi_inf,
            eps: self.eps.clone(),
            intervals: self.intervals,
            c: self.c,
            tol: self.tol,
            exec: exec::Execution::Parallel,
        }
    }
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, default_value = "table")]
    format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), u8> {
    match out {
        Some(path) => output::write_file(path, text).map_err(|e| {
            eprintln!("error: {e}");
            1
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), u8> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            exec::configure_threads(n);
            Ok(())
        }
        _ => {
            eprintln!("error: {THREADS_ENV} must be a positive integer, got `{raw}`");
            Err(2)
        }
    }
}

fn fail(e: RunError) -> u8 {
    eprintln!("error: {e}");
    e.exit_code() as u8
}

fn main_inner(cli: Cli) -> Result<(), u8> {
    configure_threads()?;
    match cli.command {
        Command::Solve { solver, b, out } => {
            let outcome = driver::run(&solver.config(b)).map_err(fail)?;
            emit(&output::render_report(&outcome.report, out.format), out.out.as_deref())
        }
        Command::Profile { solver, b, out } => {
            let outcome = driver::run(&solver.config(b)).map_err(fail)?;
            emit(&output::profile_csv(&outcome.profile), out.as_deref())
        }
        Command::Tables { skip, out } => {
            let report = tables::reproduce_tables(&skip, exec::Execution::Parallel);
            emit(&output::render_tables(&report, out.format), out.out.as_deref())?;
            if report.any_solver_failed() {
                eprintln!("error: at least one solver failed");
                return Err(1);
            }
            Ok(())
        }
        Command::Sweep { solver, b, out } => {
            let rows = driver::sweep_b(&solver.config(2.0), &b).map_err(|e| fail(e.into()))?;
            emit(&output::render_sweep(&rows, out.format), out.out.as_deref())?;
            for r in rows.iter().filter(|r| r.failed()) {
                eprintln!("b = {}: {}", r.b, r.error.as_deref().unwrap_or(""));
            }
            if rows.iter().any(|r| r.failed()) {
                return Err(1);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
