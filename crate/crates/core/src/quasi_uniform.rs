//! Finite differences on a quasi-uniform grid reaching infinity.
//!
//! The grid is the image of `eta_j = j / J` under `xi = -c ln(1 - eta)`,
//! so `xi_J = inf`. Fractional nodes `xi_{j+alpha}` are finite for every
//! interval, which lets the scheme
//!
//! ```text
//! U_{j+1} - U_j - a_j f(b_j U_{j+1} + c_j U_j) = 0,   j = 0..J-1
//! a_j = 2 (xi_{j+3/4} - xi_{j+1/4})
//! b_j = (xi_{j+1/2} - xi_j) / (xi_{j+1} - xi_j),   c_j = 1 - b_j
//! ```
//!
//! use the value `U_J = u(inf)` without ever touching `xi_J`. On the last
//! interval the weights degenerate to `(0, 1)`; by default they are frozen
//! to those of the previous interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::block::{self, BlockSystem, NewtonError, NewtonOptions, NewtonReport};
use crate::exec::Execution;
use crate::model::{self, BcKind, ModelParams, State3};
use crate::solution::{Boundary, MeshSolution};

const M: usize = 3;

/// A grid coordinate; the last node sits at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeCoord {
    Finite(f64),
    Infinity,
}

impl NodeCoord {
    /// # Panics
    ///
    /// Panics on the node at infinity, which must never enter arithmetic.
    pub fn finite(self) -> f64 {
        match self {
            NodeCoord::Finite(x) => x,
            NodeCoord::Infinity => panic!("the node at infinity has no finite coordinate"),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, NodeCoord::Infinity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiUniformGrid {
    c: f64,
    intervals: usize,
}

/// Interval coefficients of the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalCoeffs {
    /// Effective step `2 (xi_{j+3/4} - xi_{j+1/4})`.
    pub a: f64,
    /// Weight of `U_{j+1}` in the midpoint value.
    pub b: f64,
    /// Weight of `U_j` in the midpoint value.
    pub c: f64,
}

impl QuasiUniformGrid {
    /// # Panics
    ///
    /// Panics unless `c > 0` and `J >= 3`.
    pub fn new(c: f64, intervals: usize) -> Self {
        assert!(c > 0.0 && c.is_finite(), "map parameter c must be positive, got {c}");
        assert!(intervals >= 3, "need at least 3 intervals, got {intervals}");
        Self { c, intervals }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    /// `xi(j / J)` for a (possibly fractional) index `x` in `[0, J)`.
    pub fn at(&self, x: f64) -> f64 {
        let nj = self.intervals as f64;
        assert!((0.0..nj).contains(&x), "index {x} outside [0, {nj})");
        // -c ln(1 - x/J) = c (ln J - ln(J - x))
        self.c * (nj.ln() - (nj - x).ln())
    }

    pub fn node(&self, j: usize) -> NodeCoord {
        assert!(j <= self.intervals);
        if j == self.intervals {
            NodeCoord::Infinity
        } else {
            NodeCoord::Finite(self.at(j as f64))
        }
    }

    /// `xi_{j + alpha}` for `0 < alpha < 1`.
    pub fn fractional_node(&self, j: usize, alpha: f64) -> f64 {
        assert!(alpha > 0.0 && alpha < 1.0 && j < self.intervals);
        self.at(j as f64 + alpha)
    }

    /// Finite node coordinates `xi_0 .. xi_{J-1}`.
    pub fn finite_nodes(&self) -> Vec<f64> {
        (0..self.intervals).map(|j| self.at(j as f64)).collect()
    }

    /// Literal midpoint weights of interval `j`; `(0, 1)` on the last one.
    pub fn literal_weights(&self, j: usize) -> (f64, f64) {
        assert!(j < self.intervals);
        if j + 1 == self.intervals {
            return (0.0, 1.0);
        }
        let (x0, x1) = (self.at(j as f64), self.at(j as f64 + 1.0));
        let b = (self.fractional_node(j, 0.5) - x0) / (x1 - x0);
        (b, 1.0 - b)
    }

    /// Scheme coefficients of interval `j`. With `freeze`, the last interval
    /// reuses the weights of interval `J - 2`.
    pub fn coeffs(&self, j: usize, freeze: bool) -> IntervalCoeffs {
        let a = 2.0 * (self.fractional_node(j, 0.75) - self.fractional_node(j, 0.25));
        let (b, c) = if freeze && j + 1 == self.intervals {
            self.literal_weights(j - 1)
        } else {
            self.literal_weights(j)
        };
        IntervalCoeffs { a, b, c }
    }
}

/// Builds the grid `xi_j = -c ln(1 - j/J)`.
pub fn grid_build(c: f64, intervals: usize) -> QuasiUniformGrid {
    QuasiUniformGrid::new(c, intervals)
}

fn combine(wa: f64, a: &State3, wb: f64, b: &State3) -> State3 {
    State3::new(wa * a.u1 + wb * b.u1, wa * a.u2 + wb * b.u2, wa * a.u3 + wb * b.u3)
}

/// Midpoint value of interval `j` (frozen weights on the last interval).
pub fn midpoint_value(u_j: &State3, u_j1: &State3, grid: &QuasiUniformGrid, j: usize) -> State3 {
    let k = grid.coeffs(j, true);
    combine(k.c, u_j, k.b, u_j1)
}

/// Midpoint derivative `(u_{j+1} - u_j) / (2 (xi_{j+3/4} - xi_{j+1/4}))`.
pub fn midpoint_derivative(u_j: &State3, u_j1: &State3, grid: &QuasiUniformGrid, j: usize) -> State3 {
    let a = grid.coeffs(j, true).a;
    combine(-1.0 / a, u_j, 1.0 / a, u_j1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QugProblem {
    pub params: ModelParams,
    pub kind: BcKind,
    pub c: f64,
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Freeze the last-interval weights (on by default).
    pub freeze: bool,
    pub exec: Execution,
}

impl QugProblem {
    pub fn new(params: ModelParams, kind: BcKind) -> Self {
        Self {
            params,
            kind,
            c: 5.0,
            intervals: 200,
            tol: 1e-6,
            max_iter: 100,
            freeze: true,
            exec: Execution::default(),
        }
    }

    pub fn with_intervals(mut self, intervals: usize) -> Self {
        self.intervals = intervals;
        self
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<(), QugError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(QugError::InvalidProblem(format!("c must be positive, got {}", self.c)));
        }
        if self.intervals < 3 {
            return Err(QugError::InvalidProblem(format!("need at least 3 intervals, got {}", self.intervals)));
        }
        if !(self.tol > 0.0) {
            return Err(QugError::InvalidProblem("tol must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> QuasiUniformGrid {
        QuasiUniformGrid::new(self.c, self.intervals)
    }
}

/// Nodal values `(u1, u2, u3)` for `j = 0..=J`; node `J` is infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QugState {
    values: Vec<f64>,
}

impl QugState {
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(values.len() % M == 0 && values.len() >= 2 * M);
        Self { values }
    }

    /// Starting iterate `u1 = 1`, `u2 = u3 = 0.1` at every node.
    pub fn initial_guess(intervals: usize) -> Self {
        Self { values: (0..=intervals).flat_map(|_| [1.0, 0.1, 0.1]).collect() }
    }

    pub fn uniform(intervals: usize, s: State3) -> Self {
        Self { values: (0..=intervals).flat_map(|_| s.to_array()).collect() }
    }

    pub fn intervals(&self) -> usize {
        self.values.len() / M - 1
    }

    pub fn state(&self, j: usize) -> State3 {
        State3::from(&self.values[j * M..(j + 1) * M])
    }

    pub fn at_infinity(&self) -> State3 {
        self.state(self.intervals())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QugError {
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error("invalid quasi-uniform problem: {0}")]
    InvalidProblem(String),
}

/// The quasi-uniform scheme as a [`BlockSystem`]. Coefficients are
/// precomputed per interval.
#[derive(Debug, Clone)]
pub struct QugSystem {
    params: ModelParams,
    kind: BcKind,
    grid: QuasiUniformGrid,
    coeffs: Vec<IntervalCoeffs>,
    mid_xi: Vec<f64>,
}

impl QugSystem {
    pub fn new(prob: &QugProblem) -> Self {
        let grid = prob.grid();
        let coeffs = (0..grid.intervals()).map(|j| grid.coeffs(j, prob.freeze)).collect();
        let mid_xi = (0..grid.intervals()).map(|j| grid.fractional_node(j, 0.5)).collect();
        Self { params: prob.params, kind: prob.kind, grid, coeffs, mid_xi }
    }

    pub fn grid(&self) -> &QuasiUniformGrid {
        &self.grid
    }
}

impl BlockSystem for QugSystem {
    fn block_size(&self) -> usize {
        M
    }

    fn intervals(&self) -> usize {
        self.grid.intervals()
    }

    fn interval_residual(&self, k: usize, left: &[f64], right: &[f64], out: &mut [f64]) {
        let IntervalCoeffs { a, b, c } = self.coeffs[k];
        let mid = combine(c, &State3::from(left), b, &State3::from(right));
        let f = model::rhs(self.mid_xi[k], &mid, &self.params).to_array();
        for i in 0..M {
            out[i] = right[i] - left[i] - a * f[i];
        }
    }

    fn interval_jacobian(&self, k: usize, left: &[f64], right: &[f64], d_left: &mut [f64], d_right: &mut [f64]) {
        let IntervalCoeffs { a, b, c } = self.coeffs[k];
        let mid = combine(c, &State3::from(left), b, &State3::from(right));
        let jf = model::rhs_jacobian(self.mid_xi[k], &mid, &self.params);
        for r in 0..M {
            for col in 0..M {
                d_left[r * M + col] = -a * c * jf[r][col];
                d_right[r * M + col] = -a * b * jf[r][col];
            }
            d_left[r * M + r] -= 1.0;
            d_right[r * M + r] += 1.0;
        }
    }

    fn boundary_residual(&self, first: &[f64], last: &[f64], out: &mut [f64]) {
        out[0] = first[0];
        out[1] = first[self.kind.fixed_slot()];
        out[2] = last[0] - 1.0;
    }

    fn boundary_jacobian(&self, _first: &[f64], _last: &[f64], d_first: &mut [f64], d_last: &mut [f64]) {
        d_first.fill(0.0);
        d_last.fill(0.0);
        d_first[0] = 1.0;
        d_first[M + self.kind.fixed_slot()] = 1.0;
        d_last[2 * M] = 1.0;
    }
}

/// Scheme residual: `3 J` interval rows, then `u1(0)`, `u2(0)` or `u3(0)`,
/// `u1(inf) - 1`.
pub fn qug_residual(u: &QugState, prob: &QugProblem) -> Vec<f64> {
    assert_eq!(u.intervals(), prob.intervals, "state and problem grids differ");
    block::assemble_residual(&QugSystem::new(prob), u.values(), prob.exec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QugSolution {
    pub mesh: MeshSolution,
    pub report: NewtonReport,
    pub state: QugState,
}

impl QugSolution {
    pub fn beta(&self) -> f64 {
        self.mesh.beta
    }
}

/// Solves from the default starting iterate.
pub fn solve_qug(prob: &QugProblem) -> Result<QugSolution, QugError> {
    solve_qug_from(prob, None)
}

/// Solves from `initial`, or the default starting iterate when `None`.
pub fn solve_qug_from(prob: &QugProblem, initial: Option<QugState>) -> Result<QugSolution, QugError> {
    prob.validate()?;
    let u0 = initial.unwrap_or_else(|| QugState::initial_guess(prob.intervals));
    if u0.intervals() != prob.intervals {
        return Err(QugError::InvalidProblem(format!(
            "initial state has {} intervals, problem has {}",
            u0.intervals(),
            prob.intervals
        )));
    }
    let sys = QugSystem::new(prob);
    let opts = NewtonOptions { tol: prob.tol, max_iter: prob.max_iter, damping: 1.0, exec: prob.exec };
    let (values, report) = block::newton_solve(&sys, u0.values, &opts)?;
    let state = QugState { values };
    let nj = prob.intervals;
    let states: Vec<State3> = (0..nj).map(|j| state.state(j)).collect();
    let mesh = MeshSolution {
        xi: sys.grid().finite_nodes(),
        beta: states[0].to_array()[prob.kind.missing_slot()],
        states,
        at_infinity: Some(state.at_infinity()),
        boundary: Boundary::Infinite,
    };
    Ok(QugSolution { mesh, report, state })
}
