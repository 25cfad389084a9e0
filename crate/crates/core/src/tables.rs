//! Reproduction of the comparison tables at `b = 2` for both boundary kinds,
//! annotated against the published values.

use serde::{Deserialize, Serialize};

use crate::driver::{self, Method, Plan, RunConfig, SolveReport};
use crate::exec::{self, Execution};
use crate::ivp::IvpStats;
use crate::model::{self, BcKind};
use crate::reference::{self, Group, TableConfig, TableEntry};

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub kind: BcKind,
    /// Boundary descriptor: `xi_inf = ..`, `xi_eps = ..` or `xi_J = inf`.
    pub boundary: String,
    pub gridpoints: Option<usize>,
    pub iterations: usize,
    pub beta: f64,
}

impl ComparisonRow {
    pub fn from_report(label: &str, report: &SolveReport) -> Self {
        Self {
            method: label.to_string(),
            kind: report.kind,
            boundary: report.boundary.to_string(),
            gridpoints: report.gridpoints,
            iterations: report.iterations,
            beta: report.beta,
        }
    }
}

/// A computed row next to its published counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedRow {
    pub label: String,
    /// `None` when the solver failed; see `error`.
    pub row: Option<ComparisonRow>,
    pub error: Option<String>,
    pub reference_beta: f64,
    pub beta_tol: f64,
    pub reference_iterations: usize,
    pub iteration_slack: usize,
    pub beta_pass: bool,
    pub iterations_pass: bool,
    pub ivp_stats: Option<IvpStats>,
}

impl AnnotatedRow {
    pub fn pass(&self) -> bool {
        self.beta_pass && self.iterations_pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub kind: BcKind,
    /// Closed-form approximation of `beta`, shown in the caption.
    pub approximation: f64,
    pub rows: Vec<AnnotatedRow>,
}

/// Shooting cost next to the published counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub kind: BcKind,
    pub label: String,
    pub stats: IvpStats,
    pub iterations: usize,
    pub reference_steps: usize,
    pub reference_rejections: usize,
    pub reference_evaluations: usize,
    /// Evaluation count within [`reference::COST_FACTOR`] of the published one.
    pub within_factor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesReport {
    pub tables: Vec<ComparisonTable>,
    pub cost: Vec<CostRow>,
    /// Per kind, whether Newton shooting used fewer evaluations than secant.
    pub newton_cheaper: Vec<(BcKind, bool)>,
}

impl TablesReport {
    /// Whether any solver failed (annotations do not count).
    pub fn any_solver_failed(&self) -> bool {
        self.tables.iter().flat_map(|t| &t.rows).any(|r| r.error.is_some())
    }

    pub fn all_pass(&self) -> bool {
        self.tables.iter().flat_map(|t| &t.rows).all(AnnotatedRow::pass)
            && self.cost.iter().all(|c| c.within_factor)
            && self.newton_cheaper.iter().all(|&(_, ok)| ok)
    }

    pub fn rows(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.tables.iter().flat_map(|t| &t.rows).filter_map(|r| r.row.as_ref())
    }
}

/// Run configuration used for one published row.
pub fn table_config(entry: &TableEntry, exec: Execution) -> RunConfig {
    let (method, intervals) = match entry.config {
        TableConfig::ShootSecant => (Method::ShootSecant, None),
        TableConfig::ShootNewton => (Method::ShootNewton, None),
        TableConfig::Fbf { intervals } => (Method::Fbf, Some(intervals)),
        TableConfig::Qug { intervals } => (Method::Qug, Some(intervals)),
    };
    let mut cfg = RunConfig::new(method, entry.kind);
    cfg.intervals = intervals;
    cfg.exec = exec;
    cfg
}

/// Runs every published configuration not in `skip`. Independent rows run
/// concurrently under [`Execution::Parallel`]; the output order is fixed.
pub fn reproduce_tables(skip: &[Group], exec: Execution) -> TablesReport {
    let entries: Vec<TableEntry> = reference::COMPARISON.iter().copied().filter(|e| !skip.contains(&e.config.group())).collect();
    let results = exec::map_ordered(exec, &entries, |e| {
        let cfg = table_config(e, exec);
        let plan: Plan = cfg.plan().expect("published configurations are valid");
        driver::execute(&plan, cfg.method, None)
    });

    let mut tables: Vec<ComparisonTable> = BcKind::ALL
        .iter()
        .map(|&kind| ComparisonTable { kind, approximation: model::approx_missing_init(kind, 2.0), rows: Vec::new() })
        .collect();
    for (e, res) in entries.iter().zip(results) {
        let label = e.config.label().to_string();
        let annotated = match res {
            Ok(out) => {
                let r = &out.report;
                AnnotatedRow {
                    row: Some(ComparisonRow::from_report(&label, r)),
                    error: None,
                    reference_beta: e.beta,
                    beta_tol: e.beta_tol,
                    reference_iterations: e.iterations,
                    iteration_slack: e.iteration_slack,
                    beta_pass: reference::within(r.beta, e.beta, e.beta_tol),
                    iterations_pass: reference::within_count(r.iterations, e.iterations, e.iteration_slack),
                    ivp_stats: r.ivp_stats,
                    label,
                }
            }
            Err(err) => AnnotatedRow {
                row: None,
                error: Some(err.to_string()),
                reference_beta: e.beta,
                beta_tol: e.beta_tol,
                reference_iterations: e.iterations,
                iteration_slack: e.iteration_slack,
                beta_pass: false,
                iterations_pass: false,
                ivp_stats: None,
                label,
            },
        };
        let t = tables.iter_mut().find(|t| t.kind == e.kind).expect("both kinds present");
        t.rows.push(annotated);
    }

    let mut cost = Vec::new();
    for c in &reference::SHOOTING_COST {
        let found = tables
            .iter()
            .filter(|t| t.kind == c.kind)
            .flat_map(|t| &t.rows)
            .find(|r| r.label == c.config.label());
        if let Some(AnnotatedRow { row: Some(row), ivp_stats: Some(stats), .. }) = found {
            let ratio = stats.rhs_evaluations as f64 / c.evaluations as f64;
            cost.push(CostRow {
                kind: c.kind,
                label: row.method.clone(),
                stats: *stats,
                iterations: row.iterations,
                reference_steps: c.steps,
                reference_rejections: c.rejections,
                reference_evaluations: c.evaluations,
                within_factor: ratio <= reference::COST_FACTOR && ratio >= 1.0 / reference::COST_FACTOR,
            });
        }
    }
    let newton_cheaper = BcKind::ALL
        .iter()
        .filter_map(|&kind| {
            let evals = |label: &str| cost.iter().find(|c| c.kind == kind && c.label == label).map(|c| c.stats.rhs_evaluations);
            let secant = evals(TableConfig::ShootSecant.label())?;
            let newton = evals(TableConfig::ShootNewton.label())?;
            Some((kind, newton < secant))
        })
        .collect();
    TablesReport { tables, cost, newton_cheaper }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skipping_everything_yields_empty_tables() {
        let r = reproduce_tables(&[Group::Shooting, Group::Fbf, Group::Qug], Execution::Sequential);
        assert_eq!(r.tables.len(), 2);
        assert!(r.tables.iter().all(|t| t.rows.is_empty()));
        assert!(r.cost.is_empty());
        assert!(!r.any_solver_failed());
    }

    #[test]
    fn qug_rows_only() {
        let r = reproduce_tables(&[Group::Shooting, Group::Fbf], Execution::Sequential);
        for t in &r.tables {
            assert_eq!(t.rows.len(), 2);
            assert!(t.rows.iter().all(|row| row.label == "QUG" && row.beta_pass), "{t:?}");
        }
        assert!((r.tables[0].approximation - 0.828336).abs() < 5e-7);
    }
}
