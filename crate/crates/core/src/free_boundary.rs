//! Free-boundary formulation solved by Keller's box scheme.
//!
//! The condition at infinity is replaced by `u(xi_eps) = 1` and
//! `u'(xi_eps) = eps` at an unknown boundary `xi_eps`. Appending
//! `u4 = xi_eps` as a fourth (constant) unknown and rescaling
//! `z = xi / u4` gives a fixed problem on `[0, 1]`:
//!
//! ```text
//! dU/dz = (u4 f(u), 0),   U = (u1, u2, u3, u4)
//! ```
//!
//! which the box scheme discretizes on a uniform mesh of `J` intervals:
//! `V_j - V_{j-1} - dz F((V_j + V_{j-1}) / 2) = 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{self, BlockSystem, NewtonError, NewtonOptions, NewtonReport};
use crate::exec::Execution;
use crate::model::{self, BcKind, ModelParams, State3};
use crate::solution::{Boundary, MeshSolution};

const M: usize = 4;

/// Free boundary of the default starting iterate.
const DEFAULT_BOUNDARY_GUESS: f64 = 2.0;

/// Starting free boundary for a cold solve. With monotone far-field decay
/// this is the default 2. With oscillatory decay the free-boundary
/// conditions also hold at short, spurious boundaries, so the guess is
/// instead the distance `ln(1/eps) / rate` over which the slowest mode decays
/// to `eps`.
pub fn boundary_guess(b: f64, eps: f64) -> f64 {
    let decay = model::far_field_decay(b);
    if decay.oscillatory {
        (1.0 / eps).ln() / decay.rate
    } else {
        DEFAULT_BOUNDARY_GUESS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbfProblem {
    pub params: ModelParams,
    pub kind: BcKind,
    /// Slope imposed at the free boundary.
    pub eps: f64,
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Execution,
}

impl FbfProblem {
    pub fn new(params: ModelParams, kind: BcKind, eps: f64) -> Self {
        Self { params, kind, eps, intervals: 2000, tol: 1e-6, max_iter: 100, exec: Execution::default() }
    }

    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), FbfError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(FbfError::InvalidProblem(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.intervals < 2 {
            return Err(FbfError::InvalidProblem(format!("need at least 2 intervals, got {}", self.intervals)));
        }
        if !(self.tol > 0.0) {
            return Err(FbfError::InvalidProblem("tol must be positive".into()));
        }
        Ok(())
    }

    fn newton_options(&self) -> NewtonOptions {
        NewtonOptions { tol: self.tol, max_iter: self.max_iter, damping: 1.0, exec: self.exec }
    }
}

/// Nodal unknowns `(u1, u2, u3, u4)` for `j = 0..=J`, node-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbfState {
    values: Vec<f64>,
}

impl FbfState {
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(values.len() % M == 0 && values.len() >= 2 * M, "need 4 values per node and at least 2 nodes");
        Self { values }
    }

    /// Starting iterate `u1 = z`, `u2 = z / 2`, `u3 = 1 - z`, `u4 = 2`.
    pub fn initial_guess(intervals: usize) -> Self {
        Self::initial_guess_with_boundary(intervals, DEFAULT_BOUNDARY_GUESS)
    }

    /// [`FbfState::initial_guess`] with the free boundary set to `xi0`.
    pub fn initial_guess_with_boundary(intervals: usize, xi0: f64) -> Self {
        let mut values = Vec::with_capacity(M * (intervals + 1));
        for j in 0..=intervals {
            let z = j as f64 / intervals as f64;
            values.extend_from_slice(&[z, 0.5 * z, 1.0 - z, xi0]);
        }
        Self { values }
    }

    pub fn intervals(&self) -> usize {
        self.values.len() / M - 1
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[j * M..(j + 1) * M]
    }

    pub fn state(&self, j: usize) -> State3 {
        State3::from(self.node(j))
    }

    pub fn free_boundary(&self) -> f64 {
        self.values[3]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FbfError {
    #[error(transparent)]
    Newton(NewtonError),
    #[error("free boundary became non-positive at Newton iteration {iteration}")]
    NegativeFreeBoundary { iteration: usize },
    #[error("invalid free-boundary problem: {0}")]
    InvalidProblem(String),
}

impl From<NewtonError> for FbfError {
    fn from(e: NewtonError) -> Self {
        match e {
            NewtonError::Inadmissible { iteration, .. } => FbfError::NegativeFreeBoundary { iteration },
            other => FbfError::Newton(other),
        }
    }
}

/// The box-scheme equations as a [`BlockSystem`].
#[derive(Debug, Clone, Copy)]
pub struct FbfSystem {
    params: ModelParams,
    kind: BcKind,
    eps: f64,
    intervals: usize,
    dz: f64,
}

impl FbfSystem {
    pub fn new(prob: &FbfProblem) -> Self {
        Self {
            params: prob.params,
            kind: prob.kind,
            eps: prob.eps,
            intervals: prob.intervals,
            dz: 1.0 / prob.intervals as f64,
        }
    }

    fn midpoint(left: &[f64], right: &[f64]) -> (State3, f64) {
        let mid = |i: usize| 0.5 * (left[i] + right[i]);
        (State3::new(mid(0), mid(1), mid(2)), mid(3))
    }
}

impl BlockSystem for FbfSystem {
    fn block_size(&self) -> usize {
        M
    }

    fn intervals(&self) -> usize {
        self.intervals
    }

    fn interval_residual(&self, k: usize, left: &[f64], right: &[f64], out: &mut [f64]) {
        let (u, scale) = Self::midpoint(left, right);
        let z_mid = (k as f64 + 0.5) * self.dz;
        let f = model::rhs(z_mid * scale, &u, &self.params).to_array();
        for i in 0..3 {
            out[i] = right[i] - left[i] - self.dz * scale * f[i];
        }
        out[3] = right[3] - left[3];
    }

    fn interval_jacobian(&self, k: usize, left: &[f64], right: &[f64], d_left: &mut [f64], d_right: &mut [f64]) {
        let (u, scale) = Self::midpoint(left, right);
        let z_mid = (k as f64 + 0.5) * self.dz;
        let f = model::rhs(z_mid * scale, &u, &self.params).to_array();
        let jf = model::rhs_jacobian(z_mid * scale, &u, &self.params);
        let half = 0.5 * self.dz;
        d_left.fill(0.0);
        d_right.fill(0.0);
        for r in 0..3 {
            for c in 0..3 {
                let g = half * scale * jf[r][c];
                d_left[r * M + c] = -g;
                d_right[r * M + c] = -g;
            }
            d_left[r * M + 3] = -half * f[r];
            d_right[r * M + 3] = -half * f[r];
        }
        for i in 0..M {
            d_left[i * M + i] -= 1.0;
            d_right[i * M + i] += 1.0;
        }
    }

    fn boundary_residual(&self, first: &[f64], last: &[f64], out: &mut [f64]) {
        out[0] = first[0];
        out[1] = first[self.kind.fixed_slot()];
        out[2] = last[0] - 1.0;
        out[3] = last[1] - self.eps;
    }

    fn boundary_jacobian(&self, _first: &[f64], _last: &[f64], d_first: &mut [f64], d_last: &mut [f64]) {
        d_first.fill(0.0);
        d_last.fill(0.0);
        d_first[0] = 1.0;
        d_first[M + self.kind.fixed_slot()] = 1.0;
        d_last[2 * M] = 1.0;
        d_last[3 * M + 1] = 1.0;
    }

    fn check_iterate(&self, v: &[f64]) -> Result<(), String> {
        match v.chunks_exact(M).position(|node| !(node[3] > 0.0)) {
            Some(j) => Err(format!("u4 = {} at node {j}", v[j * M + 3])),
            None => Ok(()),
        }
    }
}

/// Box-scheme residual: `4 J` interval rows, then the boundary rows
/// `u1(0)`, `u2(0)` (no-slip) or `u3(0)` (slip), `u1(1) - 1`, `u2(1) - eps`.
pub fn fbf_residual(v: &FbfState, prob: &FbfProblem) -> Vec<f64> {
    assert_eq!(v.intervals(), prob.intervals, "state and problem meshes differ");
    block::assemble_residual(&FbfSystem::new(prob), v.values(), prob.exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbfSolution {
    pub mesh: MeshSolution,
    pub report: NewtonReport,
    pub state: FbfState,
}

impl FbfSolution {
    pub fn free_boundary(&self) -> f64 {
        self.state.free_boundary()
    }

    pub fn beta(&self) -> f64 {
        self.mesh.beta
    }
}

fn to_mesh(state: &FbfState, kind: BcKind) -> MeshSolution {
    let nj = state.intervals();
    let xi_eps = state.free_boundary();
    let xi = (0..=nj).map(|j| j as f64 / nj as f64 * xi_eps).collect();
    let states: Vec<State3> = (0..=nj).map(|j| state.state(j)).collect();
    MeshSolution {
        xi,
        beta: states[0].to_array()[kind.missing_slot()],
        states,
        at_infinity: None,
        boundary: Boundary::Free(xi_eps),
    }
}

/// Solves the free-boundary problem, starting from `initial` or, when `None`,
/// from the default guess with the free boundary from [`boundary_guess`].
pub fn solve_fbf(prob: &FbfProblem, initial: Option<FbfState>) -> Result<FbfSolution, FbfError> {
    prob.validate()?;
    let Some(v0) = initial else {
        let xi0 = boundary_guess(prob.params.b, prob.eps);
        if xi0 == DEFAULT_BOUNDARY_GUESS {
            return solve_fbf(prob, Some(FbfState::initial_guess(prob.intervals)));
        }
        // Fall back to the default guess if the long boundary is out of reach.
        return solve_fbf(prob, Some(FbfState::initial_guess_with_boundary(prob.intervals, xi0)))
            .or_else(|_| solve_fbf(prob, Some(FbfState::initial_guess(prob.intervals))));
    };
    if v0.intervals() != prob.intervals {
        return Err(FbfError::InvalidProblem(format!(
            "initial state has {} intervals, problem has {}",
            v0.intervals(),
            prob.intervals
        )));
    }
    let sys = FbfSystem::new(prob);
    let (v, report) = block::newton_solve(&sys, v0.into_values(), &prob.newton_options())?;
    let state = FbfState { values: v };
    Ok(FbfSolution { mesh: to_mesh(&state, prob.kind), report, state })
}

/// Outcome of an `eps`-continuation run: the converged prefix and, if the
/// sequence was cut short, the failing `eps` with its error.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationOutcome {
    pub solutions: Vec<FbfSolution>,
    pub failure: Option<(f64, FbfError)>,
}

impl ContinuationOutcome {
    pub fn iterations(&self) -> Vec<usize> {
        self.solutions.iter().map(|s| s.report.iterations).collect()
    }
}

/// Solves for each `eps` in a strictly decreasing sequence, warm-starting
/// every solve after the first from the previous converged state.
pub fn continuation_solve(template: &FbfProblem, eps_sequence: &[f64]) -> Result<ContinuationOutcome, FbfError> {
    if eps_sequence.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(FbfError::InvalidProblem("eps sequence must be strictly decreasing".into()));
    }
    for &eps in eps_sequence {
        template.with_eps(eps).validate()?;
    }
    let mut solutions: Vec<FbfSolution> = Vec::with_capacity(eps_sequence.len());
    for &eps in eps_sequence {
        let warm = solutions.last().map(|s| s.state.clone());
        match solve_fbf(&template.with_eps(eps), warm) {
            Ok(sol) => solutions.push(sol),
            Err(e) => return Ok(ContinuationOutcome { solutions, failure: Some((eps, e)) }),
        }
    }
    Ok(ContinuationOutcome { solutions, failure: None })
}
