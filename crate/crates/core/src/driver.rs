//! Run configuration and dispatch to the individual solvers, plus the
//! `b`-sweep. Config problems and solver failures are kept apart so a front
//! end can map them to distinct exit codes.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::exec::Execution;
use crate::free_boundary::{self, FbfProblem, FbfState};
use crate::ivp::IvpStats;
use crate::model::{self, BcKind, ModelParams, State3};
use crate::quasi_uniform::{self, QugProblem, QugState};
use crate::reference;
use crate::shooting::{self, ShootingProblem};
use crate::solution::{Boundary, MeshSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ShootSecant,
    ShootNewton,
    Fbf,
    FbfContinuation,
    Qug,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::ShootSecant, Method::ShootNewton, Method::Fbf, Method::FbfContinuation, Method::Qug];

    pub fn name(self) -> &'static str {
        match self {
            Method::ShootSecant => "shoot-secant",
            Method::ShootNewton => "shoot-newton",
            Method::Fbf => "fbf",
            Method::FbfContinuation => "fbf-continuation",
            Method::Qug => "qug",
        }
    }

    pub fn is_shooting(self) -> bool {
        matches!(self, Method::ShootSecant | Method::ShootNewton)
    }

    fn is_fbf(self) -> bool {
        matches!(self, Method::Fbf | Method::FbfContinuation)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected shoot-secant, shoot-newton, fbf, fbf-continuation or qug)"))
    }
}

/// Solver selection plus the knobs a user may set. Unset knobs take the
/// method defaults; setting a knob the method does not use is an error.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub kind: BcKind,
    pub b: f64,
    pub beta0: Option<f64>,
    pub beta1: Option<f64>,
    pub xi_inf: Option<f64>,
    pub eps: Vec<f64>,
    pub intervals: Option<usize>,
    pub c: Option<f64>,
    pub tol: Option<f64>,
    pub exec: Execution,
}

impl RunConfig {
    pub fn new(method: Method, kind: BcKind) -> Self {
        Self {
            method,
            kind,
            b: 2.0,
            beta0: None,
            beta1: None,
            xi_inf: None,
            eps: Vec::new(),
            intervals: None,
            c: None,
            tol: None,
            exec: Execution::default(),
        }
    }

    /// Checks knob presence and ranges and builds the solver problem.
    pub fn plan(&self) -> Result<Plan, ConfigError> {
        let m = self.method;
        let reject = |set: bool, flag: &str, users: &str| -> Result<(), ConfigError> {
            if set {
                Err(ConfigError(format!("{flag} is not used by {m} (only by {users})")))
            } else {
                Ok(())
            }
        };
        reject(self.beta0.is_some() && !m.is_shooting(), "--beta0", "shoot-secant, shoot-newton")?;
        reject(self.beta1.is_some() && m != Method::ShootSecant, "--beta1", "shoot-secant")?;
        reject(self.xi_inf.is_some() && !m.is_shooting(), "--xi-inf", "shoot-secant, shoot-newton")?;
        reject(!self.eps.is_empty() && !m.is_fbf(), "--eps", "fbf, fbf-continuation")?;
        reject(self.intervals.is_some() && m.is_shooting(), "--J", "fbf, fbf-continuation, qug")?;
        reject(self.c.is_some() && m != Method::Qug, "--c", "qug")?;
        if !(self.b.is_finite() && self.b >= 0.0) {
            return Err(ConfigError(format!("--b must be finite and non-negative, got {}", self.b)));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(ConfigError(format!("--tol must be positive, got {tol}")));
            }
        }
        let params = ModelParams::new(self.b);
        let (seed0, seed1) = reference::default_seeds(self.kind);

        let plan = match m {
            Method::ShootSecant | Method::ShootNewton => {
                let mut prob = ShootingProblem::new(params, self.kind);
                if let Some(x) = self.xi_inf {
                    if !(x > 0.0 && x.is_finite()) {
                        return Err(ConfigError(format!("--xi-inf must be positive, got {x}")));
                    }
                    prob = prob.with_xi_infinity(x);
                }
                if let Some(tol) = self.tol {
                    prob = prob.with_tol(tol);
                }
                let beta0 = finite_seed(self.beta0.unwrap_or(seed0), "--beta0")?;
                if m == Method::ShootNewton {
                    Plan::Newton { prob, beta0 }
                } else {
                    let beta1 = finite_seed(self.beta1.unwrap_or(seed1), "--beta1")?;
                    if beta0 == beta1 {
                        return Err(ConfigError("--beta0 and --beta1 must differ".into()));
                    }
                    Plan::Secant { prob, beta0, beta1 }
                }
            }
            Method::Fbf => {
                let eps = match self.eps.as_slice() {
                    [] => reference::TABLE_EPS,
                    [e] => *e,
                    _ => return Err(ConfigError("fbf takes a single --eps; use fbf-continuation for a sequence".into())),
                };
                let prob = self.fbf_problem(params, eps)?;
                prob.validate().map_err(|e| ConfigError(e.to_string()))?;
                Plan::Fbf(prob)
            }
            Method::FbfContinuation => {
                let eps = if self.eps.is_empty() { reference::CONTINUATION_EPS.to_vec() } else { self.eps.clone() };
                if eps.windows(2).any(|w| !(w[1] < w[0])) {
                    return Err(ConfigError("--eps values must be strictly decreasing".into()));
                }
                let template = self.fbf_problem(params, eps[0])?;
                for &e in &eps {
                    template.with_eps(e).validate().map_err(|e| ConfigError(e.to_string()))?;
                }
                Plan::Continuation { template, eps }
            }
            Method::Qug => {
                let mut prob = QugProblem::new(params, self.kind).with_c(self.c.unwrap_or(reference::TABLE_C));
                prob.exec = self.exec;
                if let Some(j) = self.intervals {
                    prob = prob.with_intervals(j);
                }
                if let Some(tol) = self.tol {
                    prob = prob.with_tol(tol);
                }
                prob.validate().map_err(|e| ConfigError(e.to_string()))?;
                Plan::Qug(prob)
            }
        };
        Ok(plan)
    }

    fn fbf_problem(&self, params: ModelParams, eps: f64) -> Result<FbfProblem, ConfigError> {
        let mut prob = FbfProblem::new(params, self.kind, eps);
        prob.exec = self.exec;
        if let Some(j) = self.intervals {
            prob = prob.with_intervals(j);
        }
        if let Some(tol) = self.tol {
            prob = prob.with_tol(tol);
        }
        Ok(prob)
    }
}

fn finite_seed(v: f64, flag: &str) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError(format!("{flag} must be finite, got {v}")))
    }
}

/// A validated run, ready to execute.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Secant { prob: ShootingProblem, beta0: f64, beta1: f64 },
    Newton { prob: ShootingProblem, beta0: f64 },
    Fbf(FbfProblem),
    Continuation { template: FbfProblem, eps: Vec<f64> },
    Qug(QugProblem),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("solver failed: {0}")]
    Solver(String),
}

impl RunError {
    /// 2 for usage errors, 1 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver(_) => 1,
        }
    }
}

/// One step of an `eps`-continuation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub eps: f64,
    pub xi_eps: f64,
    pub beta: f64,
    pub iterations: usize,
}

/// Everything a run reports apart from the profile itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub kind: BcKind,
    pub b: f64,
    pub beta: f64,
    pub boundary: Boundary,
    /// Number of grid intervals for the finite-difference methods.
    pub gridpoints: Option<usize>,
    pub iterations: usize,
    /// `|F(beta)|` for shooting, mean absolute last update otherwise.
    pub residual: f64,
    /// Cumulative IVP work (shooting only).
    pub ivp_stats: Option<IvpStats>,
    pub continuation: Vec<ContinuationStep>,
    pub at_infinity: Option<State3>,
}

/// Converged state kept for warm starts.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmStart {
    Beta(f64),
    Fbf(FbfState),
    Qug(QugState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: SolveReport,
    pub profile: MeshSolution,
    pub warm: WarmStart,
}

/// Validates and runs `config`.
pub fn run(config: &RunConfig) -> Result<Outcome, RunError> {
    let plan = config.plan()?;
    execute(&plan, config.method, None)
}

/// Runs a validated plan, optionally warm-started. A warm start of the wrong
/// shape is ignored.
pub fn execute(plan: &Plan, method: Method, warm: Option<&WarmStart>) -> Result<Outcome, RunError> {
    let solver = |e: &dyn fmt::Display| RunError::Solver(e.to_string());
    match plan {
        Plan::Secant { prob, beta0, beta1 } => {
            let (b0, b1) = match warm {
                Some(WarmStart::Beta(b)) => (*b, b + (beta1 - beta0).abs().min(0.1 * b.abs().max(1e-3))),
                _ => (*beta0, *beta1),
            };
            let r = shooting::solve_secant(b0, b1, prob).map_err(|e| solver(&e))?;
            Ok(shooting_outcome(method, prob, r))
        }
        Plan::Newton { prob, beta0 } => {
            let b0 = match warm {
                Some(WarmStart::Beta(b)) => *b,
                _ => *beta0,
            };
            let r = shooting::solve_newton(b0, prob).map_err(|e| solver(&e))?;
            Ok(shooting_outcome(method, prob, r))
        }
        Plan::Fbf(prob) => {
            let init = match warm {
                Some(WarmStart::Fbf(s)) if s.intervals() == prob.intervals => Some(s.clone()),
                _ => None,
            };
            let sol = free_boundary::solve_fbf(prob, init).map_err(|e| solver(&e))?;
            let report = SolveReport {
                method,
                kind: prob.kind,
                b: prob.params.b,
                beta: sol.beta(),
                boundary: sol.mesh.boundary,
                gridpoints: Some(prob.intervals),
                iterations: sol.report.iterations,
                residual: sol.report.final_update_norm,
                ivp_stats: None,
                continuation: Vec::new(),
                at_infinity: None,
            };
            Ok(Outcome { report, profile: sol.mesh, warm: WarmStart::Fbf(sol.state) })
        }
        Plan::Continuation { template, eps } => {
            let first = match warm {
                Some(WarmStart::Fbf(s)) if s.intervals() == template.intervals => Some(s.clone()),
                _ => None,
            };
            // The first step may be warm-started; the rest chain as usual.
            let head = free_boundary::solve_fbf(&template.with_eps(eps[0]), first).map_err(|e| solver(&e))?;
            let mut steps = vec![step_of(eps[0], &head)];
            let head_state = head.state.clone();
            let mut last = head;
            for &e in &eps[1..] {
                let sol = free_boundary::solve_fbf(&template.with_eps(e), Some(last.state.clone()))
                    .map_err(|err| RunError::Solver(format!("continuation stopped at eps = {e}: {err}")))?;
                steps.push(step_of(e, &sol));
                last = sol;
            }
            let report = SolveReport {
                method,
                kind: template.kind,
                b: template.params.b,
                beta: last.beta(),
                boundary: last.mesh.boundary,
                gridpoints: Some(template.intervals),
                iterations: steps.iter().map(|s| s.iterations).sum(),
                residual: last.report.final_update_norm,
                ivp_stats: None,
                continuation: steps,
                at_infinity: None,
            };
            Ok(Outcome { report, profile: last.mesh, warm: WarmStart::Fbf(head_state) })
        }
        Plan::Qug(prob) => {
            let init = match warm {
                Some(WarmStart::Qug(s)) if s.intervals() == prob.intervals => Some(s.clone()),
                _ => None,
            };
            let sol = quasi_uniform::solve_qug_from(prob, init).map_err(|e| solver(&e))?;
            let report = SolveReport {
                method,
                kind: prob.kind,
                b: prob.params.b,
                beta: sol.beta(),
                boundary: Boundary::Infinite,
                gridpoints: Some(prob.intervals),
                iterations: sol.report.iterations,
                residual: sol.report.final_update_norm,
                ivp_stats: None,
                continuation: Vec::new(),
                at_infinity: sol.mesh.at_infinity,
            };
            Ok(Outcome { report, profile: sol.mesh, warm: WarmStart::Qug(sol.state) })
        }
    }
}

fn step_of(eps: f64, sol: &free_boundary::FbfSolution) -> ContinuationStep {
    ContinuationStep { eps, xi_eps: sol.free_boundary(), beta: sol.beta(), iterations: sol.report.iterations }
}

fn shooting_outcome(method: Method, prob: &ShootingProblem, r: shooting::ShootingResult) -> Outcome {
    let report = SolveReport {
        method,
        kind: prob.kind,
        b: prob.params.b,
        beta: r.beta,
        boundary: Boundary::Truncated(prob.xi_infinity),
        gridpoints: None,
        iterations: r.iterations,
        residual: r.residual,
        ivp_stats: Some(r.stats),
        continuation: Vec::new(),
        at_infinity: None,
    };
    Outcome { report, profile: r.trajectory, warm: WarmStart::Beta(r.beta) }
}

/// One row of a `b`-sweep. Failed rows carry no numeric value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub b: f64,
    pub beta_numeric: Option<f64>,
    pub beta_approx: f64,
    pub abs_gap: Option<f64>,
    pub rel_gap: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Solves `config` for each `b` in order, warm-starting each solve from the
/// last converged one. Per-`b` failures are recorded and the sweep goes on.
pub fn sweep_b(config: &RunConfig, b_values: &[f64]) -> Result<Vec<SweepRow>, ConfigError> {
    if let Some(b) = b_values.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(ConfigError(format!("b values must be finite and non-negative, got {b}")));
    }
    // Validate the knobs once, independently of b.
    config.plan()?;
    let mut warm: Option<WarmStart> = None;
    let mut rows = Vec::with_capacity(b_values.len());
    for &b in b_values {
        let cfg = RunConfig { b, ..config.clone() };
        let plan = cfg.plan()?;
        let approx = model::approx_missing_init(config.kind, b);
        match execute(&plan, config.method, warm.as_ref()) {
            Ok(out) => {
                let beta = out.report.beta;
                let gap = (beta - approx).abs();
                rows.push(SweepRow {
                    b,
                    beta_numeric: Some(beta),
                    beta_approx: approx,
                    abs_gap: Some(gap),
                    rel_gap: Some(gap / beta.abs()),
                    error: None,
                });
                warm = Some(out.warm);
            }
            Err(e) => rows.push(SweepRow {
                b,
                beta_numeric: None,
                beta_approx: approx,
                abs_gap: None,
                rel_gap: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method, kind: BcKind) -> RunConfig {
        RunConfig::new(method, kind)
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>(), Ok(m));
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn knobs_must_match_method() {
        let mut c = cfg(Method::ShootNewton, BcKind::NoSlip);
        c.beta1 = Some(2.0);
        assert!(c.plan().is_err());
        let mut c = cfg(Method::Qug, BcKind::NoSlip);
        c.eps = vec![1e-3];
        assert!(c.plan().is_err());
        let mut c = cfg(Method::Fbf, BcKind::Slip);
        c.c = Some(5.0);
        assert!(c.plan().is_err());
        let mut c = cfg(Method::ShootSecant, BcKind::Slip);
        c.intervals = Some(100);
        assert!(c.plan().is_err());
        let mut c = cfg(Method::Fbf, BcKind::Slip);
        c.xi_inf = Some(12.0);
        assert!(c.plan().is_err());
        let mut c = cfg(Method::Fbf, BcKind::Slip);
        c.eps = vec![1e-2, 1e-3];
        assert!(c.plan().is_err());
    }

    #[test]
    fn ranges_are_checked() {
        let mut c = cfg(Method::FbfContinuation, BcKind::NoSlip);
        c.eps = vec![1e-3, 1e-2];
        assert!(c.plan().is_err());
        let mut c = cfg(Method::Qug, BcKind::NoSlip);
        c.intervals = Some(1);
        assert!(c.plan().is_err());
        let mut c = cfg(Method::ShootSecant, BcKind::NoSlip);
        c.beta0 = Some(2.0);
        assert!(c.plan().is_err(), "coincident seeds");
        let mut c = cfg(Method::Qug, BcKind::NoSlip);
        c.b = -1.0;
        assert!(c.plan().is_err());
        let mut c = cfg(Method::Fbf, BcKind::NoSlip);
        c.tol = Some(0.0);
        assert!(c.plan().is_err());
    }

    #[test]
    fn defaults() {
        match cfg(Method::ShootSecant, BcKind::Slip).plan().unwrap() {
            Plan::Secant { prob, beta0, beta1 } => {
                assert_eq!((beta0, beta1), (0.8, 1.0));
                assert_eq!(prob.xi_infinity, 10.0);
            }
            p => panic!("{p:?}"),
        }
        match cfg(Method::FbfContinuation, BcKind::Slip).plan().unwrap() {
            Plan::Continuation { template, eps } => {
                assert_eq!(eps, reference::CONTINUATION_EPS.to_vec());
                assert_eq!(template.intervals, 2000);
            }
            p => panic!("{p:?}"),
        }
        match cfg(Method::Qug, BcKind::Slip).plan().unwrap() {
            Plan::Qug(p) => assert_eq!((p.c, p.intervals), (5.0, 200)),
            p => panic!("{p:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        let mut c = cfg(Method::Qug, BcKind::NoSlip);
        c.beta0 = Some(1.0);
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
        let mut c = cfg(Method::ShootNewton, BcKind::NoSlip);
        c.beta0 = Some(3.0);
        assert_eq!(run(&c).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn qug_run_reports_infinity() {
        let out = run(&cfg(Method::Qug, BcKind::Slip)).unwrap();
        assert_eq!(out.report.boundary, Boundary::Infinite);
        assert_eq!(out.report.gridpoints, Some(200));
        assert!(out.report.at_infinity.is_some());
        assert_eq!(out.profile.len(), 200);
    }

    #[test]
    fn sweep_edge_cases() {
        let c = cfg(Method::Qug, BcKind::NoSlip);
        assert!(sweep_b(&c, &[]).unwrap().is_empty());
        assert!(sweep_b(&c, &[1.0, -1.0]).is_err());
        let rows = sweep_b(&c, &[0.0, 1.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].beta_approx, 1.0);
        assert!((rows[0].beta_numeric.unwrap() - 1.0).abs() < 1e-4);
        assert!(rows.iter().all(|r| !r.failed()));
    }

    #[test]
    fn sweep_marks_failures_and_continues() {
        // Newton from beta0 = 3 diverges at b = 2; the b = 0 row converges
        // first and the warm start then rescues the b = 0.5 row.
        let mut c = cfg(Method::ShootNewton, BcKind::NoSlip);
        c.beta0 = Some(3.0);
        let rows = sweep_b(&c, &[2.0, 0.0, 0.5]).unwrap();
        assert!(rows[0].failed());
        assert!(rows[0].beta_numeric.is_none());
        assert!(!rows[1].failed());
        assert!(!rows[2].failed());
    }
}
