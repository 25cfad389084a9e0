//! Rendering of reports as aligned text, CSV and JSON, and profile files.
//!
//! CSV and JSON print floats in shortest round-trip form, so re-parsing
//! recovers every value bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

use crate::driver::{SolveReport, SweepRow};
use crate::solution::MeshSolution;
use crate::tables::{ComparisonRow, TablesReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (expected table, csv or json)")),
        }
    }
}

pub const PROFILE_HEADER: &str = "xi,u,du,d2u";
pub const COMPARISON_HEADER: &str = "method,boundary,gridpoints,iterations,beta";
pub const SWEEP_HEADER: &str = "b,beta_numeric,beta_approx,abs_gap,rel_gap,status";

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// Writes `contents` to `path`, attaching the path to any I/O error.
pub fn write_file(path: &Path, contents: &str) -> Result<(), WriteError> {
    std::fs::write(path, contents).map_err(|source| WriteError { path: path.to_path_buf(), source })
}

/// `xi,u,du,d2u` with one row per finite node, plus an `inf` row for the
/// state at infinity when the solution carries one.
pub fn profile_csv(mesh: &MeshSolution) -> String {
    let mut out = String::with_capacity(64 * (mesh.len() + 2));
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for (x, s) in mesh.xi.iter().zip(&mesh.states) {
        let _ = writeln!(out, "{x},{},{},{}", s.u1, s.u2, s.u3);
    }
    if let Some(s) = mesh.at_infinity {
        let _ = writeln!(out, "inf,{},{},{}", s.u1, s.u2, s.u3);
    }
    out
}

/// Writes [`profile_csv`] to `path`.
pub fn emit_profiles(mesh: &MeshSolution, path: &Path) -> Result<(), WriteError> {
    write_file(path, &profile_csv(mesh))
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Comparison rows as CSV. The method column carries the boundary kind.
pub fn comparison_csv<'a>(rows: impl IntoIterator<Item = &'a ComparisonRow>) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{} ({}),{},{},{},{}", r.method, r.kind, r.boundary, opt(r.gridpoints), r.iterations, r.beta);
    }
    out
}

pub fn report_text(r: &SolveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "method       {}", r.method);
    let _ = writeln!(out, "bc           {}", r.kind);
    let _ = writeln!(out, "b            {}", r.b);
    let _ = writeln!(out, "beta         {:.6}", r.beta);
    let _ = writeln!(out, "boundary     {}", r.boundary);
    if let Some(j) = r.gridpoints {
        let _ = writeln!(out, "gridpoints   {j}");
    }
    let _ = writeln!(out, "iterations   {}", r.iterations);
    let _ = writeln!(out, "residual     {:.3e}", r.residual);
    if let Some(s) = r.ivp_stats {
        let _ = writeln!(out, "ivp steps    {} accepted, {} rejected, {} evaluations", s.accepted_steps, s.rejected_steps, s.rhs_evaluations);
    }
    if let Some(s) = r.at_infinity {
        let _ = writeln!(out, "at infinity  u = {:.6}, du = {:.3e}, d2u = {:.3e}", s.u1, s.u2, s.u3);
    }
    if !r.continuation.is_empty() {
        let _ = writeln!(out, "continuation");
        let _ = writeln!(out, "  {:>8}  {:>12}  {:>4}  {:>8}", "eps", "xi_eps", "iter", "beta");
        for s in &r.continuation {
            let _ = writeln!(out, "  {:>8.0e}  {:>12.6}  {:>4}  {:>8.6}", s.eps, s.xi_eps, s.iterations, s.beta);
        }
    }
    out
}

/// One comparison row, or one per continuation step.
pub fn report_csv(r: &SolveReport) -> String {
    let label = r.method.name();
    if r.continuation.is_empty() {
        return comparison_csv([&ComparisonRow::from_report(label, r)]);
    }
    let rows: Vec<ComparisonRow> = r
        .continuation
        .iter()
        .map(|s| ComparisonRow {
            method: label.to_string(),
            kind: r.kind,
            boundary: crate::solution::Boundary::Free(s.xi_eps).to_string(),
            gridpoints: r.gridpoints,
            iterations: s.iterations,
            beta: s.beta,
        })
        .collect();
    comparison_csv(&rows)
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn render_report(r: &SolveReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => report_text(r),
        OutputFormat::Csv => report_csv(r),
        OutputFormat::Json => to_json(r),
    }
}

pub fn tables_text(t: &TablesReport) -> String {
    let mut out = String::new();
    for table in &t.tables {
        let _ = writeln!(out, "Comparison of numerical results, {} boundary conditions (approximation gives beta = {:.6})", table.kind, table.approximation);
        let _ = writeln!(
            out,
            "{:<16} {:<20} {:>11} {:>5} {:>9}   {:>9} {:>8}  {}",
            "method", "boundary", "grid-points", "iter", "beta", "published", "+/-", "status"
        );
        for r in &table.rows {
            match &r.row {
                Some(row) => {
                    let status = match (r.beta_pass, r.iterations_pass) {
                        (true, true) => "pass".to_string(),
                        (false, true) => "FAIL beta".to_string(),
                        (true, false) => format!("FAIL iter (published {} +/- {})", r.reference_iterations, r.iteration_slack),
                        (false, false) => "FAIL beta, iter".to_string(),
                    };
                    let _ = writeln!(
                        out,
                        "{:<16} {:<20} {:>11} {:>5} {:>9.6}   {:>9.6} {:>8.0e}  {status}",
                        row.method,
                        row.boundary,
                        opt(row.gridpoints),
                        row.iterations,
                        row.beta,
                        r.reference_beta,
                        r.beta_tol
                    );
                }
                None => {
                    let _ = writeln!(out, "{:<16} solver failed: {}", r.label, r.error.as_deref().unwrap_or("unknown error"));
                }
            }
        }
        out.push('\n');
    }
    if !t.cost.is_empty() {
        let _ = writeln!(out, "Cost of the shooting runs (published counts in parentheses)");
        let _ = writeln!(out, "{:<8} {:<16} {:>17} {:>13} {:>17} {:>5}  {}", "bc", "method", "steps", "rejections", "evaluations", "iter", "status");
        for c in &t.cost {
            let _ = writeln!(
                out,
                "{:<8} {:<16} {:>17} {:>13} {:>17} {:>5}  {}",
                c.kind.label(),
                c.label,
                format!("{} ({})", c.stats.accepted_steps, c.reference_steps),
                format!("{} ({})", c.stats.rejected_steps, c.reference_rejections),
                format!("{} ({})", c.stats.rhs_evaluations, c.reference_evaluations),
                c.iterations,
                if c.within_factor { "pass" } else { "FAIL" }
            );
        }
        for (kind, ok) in &t.newton_cheaper {
            let _ = writeln!(out, "{kind}: Newton shooting cheaper than secant: {}", if *ok { "yes" } else { "NO" });
        }
    }
    out
}

pub fn render_tables(t: &TablesReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => tables_text(t),
        OutputFormat::Csv => comparison_csv(t.rows()),
        OutputFormat::Json => to_json(t),
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let status = if r.failed() { "failed" } else { "ok" };
        let _ = writeln!(out, "{},{},{},{},{},{status}", r.b, opt(r.beta_numeric), r.beta_approx, opt(r.abs_gap), opt(r.rel_gap));
    }
    out
}

pub fn sweep_text(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>8} {:>12} {:>12} {:>10} {:>10}  {}", "b", "beta", "approx", "abs gap", "rel gap", "status");
    for r in rows {
        match (r.beta_numeric, r.abs_gap, r.rel_gap) {
            (Some(beta), Some(abs), Some(rel)) => {
                let _ = writeln!(out, "{:>8} {:>12.6} {:>12.6} {:>10.2e} {:>10.2e}  ok", r.b, beta, r.beta_approx, abs, rel);
            }
            _ => {
                let _ = writeln!(
                    out,
                    "{:>8} {:>12} {:>12.6} {:>10} {:>10}  failed: {}",
                    r.b,
                    "-",
                    r.beta_approx,
                    "-",
                    "-",
                    r.error.as_deref().unwrap_or("")
                );
            }
        }
    }
    out
}

pub fn render_sweep(rows: &[SweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => sweep_text(rows),
        OutputFormat::Csv => sweep_csv(rows),
        OutputFormat::Json => to_json(&rows),
    }
}
