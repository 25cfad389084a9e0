//! Simple shooting on a truncated interval `[0, xi_inf]`.
//!
//! The missing initial condition `beta` is the root of
//! `F(beta) = u(xi_inf; beta) - 1`. It is found either by the secant method
//! on the three-component system or by Newton's method, with `F'(beta)`
//! supplied by the variational equations integrated alongside the state.
//!
//! Both root finders stop when the relative change in `beta` and `|F|` are
//! both below the tolerance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ivp::{self, IvpError, IvpOptions, IvpStats};
use crate::model::{self, BcKind, ModelParams, State3, State6};
use crate::solution::{Boundary, MeshSolution};

/// Number of uniform samples in the returned trajectory.
pub const TRAJECTORY_SAMPLES: usize = 200;

const DEGENERATE_SECANT: f64 = 1e-14;
const SINGULAR_DERIVATIVE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingProblem {
    pub params: ModelParams,
    pub kind: BcKind,
    pub xi_infinity: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub ivp_opts: IvpOptions,
}

impl ShootingProblem {
    pub fn new(params: ModelParams, kind: BcKind) -> Self {
        Self { params, kind, xi_infinity: 10.0, tol: 1e-6, max_iter: 50, ivp_opts: IvpOptions::default() }
    }

    pub fn with_xi_infinity(mut self, xi_infinity: f64) -> Self {
        self.xi_infinity = xi_infinity;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<(), ShootingError> {
        if !(self.xi_infinity > 0.0 && self.xi_infinity.is_finite()) {
            return Err(ShootingError::InvalidProblem("xi_infinity must be positive and finite"));
        }
        if !(self.tol > 0.0) {
            return Err(ShootingError::InvalidProblem("tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub beta: f64,
    /// Number of `beta` updates (secant seeds are not counted).
    pub iterations: usize,
    /// `|F(beta)|` at the returned root.
    pub residual: f64,
    pub trajectory: MeshSolution,
    /// IVP work accumulated over all root-finder evaluations (the trajectory
    /// re-integration is excluded).
    pub stats: IvpStats,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShootingError {
    #[error("trajectory diverged for beta = {beta} at xi = {xi} (outside the convergence basin)")]
    Overflow { beta: f64, xi: f64, stats: IvpStats },
    #[error("IVP integration failed for beta = {beta}: {source}")]
    Integration { beta: f64, source: IvpError },
    #[error("no convergence in {iterations} iterations (last beta = {beta})")]
    MaxIterations { iterations: usize, beta: f64, stats: IvpStats },
    #[error("secant denominator vanished at beta = {beta}")]
    DegenerateSecant { beta: f64, stats: IvpStats },
    #[error("F'(beta) vanished at beta = {beta}")]
    SingularDerivative { beta: f64, stats: IvpStats },
    #[error("invalid shooting problem: {0}")]
    InvalidProblem(&'static str),
}

impl ShootingError {
    fn from_ivp(beta: f64, err: IvpError) -> Self {
        match err {
            IvpError::Overflow { t, stats } => ShootingError::Overflow { beta, xi: t, stats },
            source => ShootingError::Integration { beta, source },
        }
    }
}

/// Termination test: relative update and residual must both pass.
pub fn converged(beta_prev: f64, beta: f64, residual: f64, tol: f64) -> bool {
    (beta - beta_prev).abs() / beta.abs() < tol && residual.abs() < tol
}

fn residual_with_stats(beta: f64, prob: &ShootingProblem) -> Result<(f64, IvpStats), ShootingError> {
    if !beta.is_finite() {
        return Err(ShootingError::InvalidProblem("beta must be finite"));
    }
    let p = prob.params;
    let y0 = model::bc_initial(prob.kind, beta).to_array();
    let (y, stats) = ivp::integrate(
        |xi, y: &[f64; 3]| model::rhs(xi, &State3::from(*y), &p).to_array(),
        0.0,
        prob.xi_infinity,
        y0,
        &prob.ivp_opts,
    )
    .map_err(|e| ShootingError::from_ivp(beta, e))?;
    Ok((y[0] - 1.0, stats))
}

/// `F(beta) = u(xi_inf; beta) - 1`.
pub fn shoot_residual(beta: f64, prob: &ShootingProblem) -> Result<f64, ShootingError> {
    prob.validate()?;
    residual_with_stats(beta, prob).map(|(f, _)| f)
}

/// `(F(beta), F'(beta))` from the augmented six-component system.
pub fn shoot_residual_and_derivative(beta: f64, prob: &ShootingProblem) -> Result<(f64, f64, IvpStats), ShootingError> {
    if !beta.is_finite() {
        return Err(ShootingError::InvalidProblem("beta must be finite"));
    }
    let p = prob.params;
    let y0 = model::bc_initial_variational(prob.kind, beta).to_array();
    let (y, stats) = ivp::integrate(
        |xi, y: &[f64; 6]| model::rhs_variational(xi, &State6::from(*y), &p).to_array(),
        0.0,
        prob.xi_infinity,
        y0,
        &prob.ivp_opts,
    )
    .map_err(|e| ShootingError::from_ivp(beta, e))?;
    Ok((y[0] - 1.0, y[3], stats))
}

/// Re-integrates at `beta` and samples the state at uniform points of
/// `[0, xi_inf]`.
pub fn sample_trajectory(beta: f64, prob: &ShootingProblem, samples: usize) -> Result<MeshSolution, ShootingError> {
    let p = prob.params;
    let y0 = model::bc_initial(prob.kind, beta).to_array();
    sample_with(beta, prob, samples, y0, |t, y: &[f64; 3]| model::rhs(t, &State3::from(*y), &p).to_array())
}

/// Same as [`sample_trajectory`] but integrating the augmented system, so the
/// step sequence matches the one Newton used to evaluate the residual.
fn sample_trajectory_variational(beta: f64, prob: &ShootingProblem, samples: usize) -> Result<MeshSolution, ShootingError> {
    let p = prob.params;
    let y0 = model::bc_initial_variational(prob.kind, beta).to_array();
    sample_with(beta, prob, samples, y0, |t, y: &[f64; 6]| model::rhs_variational(t, &State6::from(*y), &p).to_array())
}

fn sample_with<const N: usize, F>(beta: f64, prob: &ShootingProblem, samples: usize, y0: [f64; N], rhs: F) -> Result<MeshSolution, ShootingError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    assert!(samples >= 2);
    let xi: Vec<f64> = (0..samples).map(|i| prob.xi_infinity * i as f64 / (samples - 1) as f64).collect();
    let (ys, _) = ivp::integrate_with_outputs(rhs, 0.0, prob.xi_infinity, y0, &xi[1..], &prob.ivp_opts)
        .map_err(|e| ShootingError::from_ivp(beta, e))?;
    let mut states = Vec::with_capacity(samples);
    states.push(State3::from(&y0[..3]));
    states.extend(ys.iter().map(|y| State3::from(&y[..3])));
    Ok(MeshSolution {
        xi,
        states,
        at_infinity: None,
        beta,
        boundary: Boundary::Truncated(prob.xi_infinity),
    })
}

fn finish(
    beta: f64,
    iterations: usize,
    residual: f64,
    stats: IvpStats,
    prob: &ShootingProblem,
    variational: bool,
) -> Result<ShootingResult, ShootingError> {
    let trajectory = if variational {
        sample_trajectory_variational(beta, prob, TRAJECTORY_SAMPLES)?
    } else {
        sample_trajectory(beta, prob, TRAJECTORY_SAMPLES)?
    };
    Ok(ShootingResult { beta, iterations, residual: residual.abs(), trajectory, stats })
}

/// Secant iteration started from the two seeds `beta0`, `beta1`.
pub fn solve_secant(beta0: f64, beta1: f64, prob: &ShootingProblem) -> Result<ShootingResult, ShootingError> {
    prob.validate()?;
    if beta0 == beta1 {
        return Err(ShootingError::InvalidProblem("secant seeds must differ"));
    }
    let mut stats = IvpStats::default();
    let eval = |beta: f64, stats: &mut IvpStats| -> Result<f64, ShootingError> {
        residual_with_stats(beta, prob)
            .map(|(f, s)| {
                *stats += s;
                f
            })
            .map_err(|e| match e {
                ShootingError::Overflow { beta, xi, stats: s } => {
                    *stats += s;
                    ShootingError::Overflow { beta, xi, stats: *stats }
                }
                other => other,
            })
    };

    let (mut b_prev, mut b_cur) = (beta0, beta1);
    let mut f_prev = eval(b_prev, &mut stats)?;
    let mut f_cur = eval(b_cur, &mut stats)?;
    for iteration in 1..=prob.max_iter {
        let df = f_cur - f_prev;
        if df.abs() < DEGENERATE_SECANT {
            return Err(ShootingError::DegenerateSecant { beta: b_cur, stats });
        }
        let b_next = b_cur - f_cur * (b_cur - b_prev) / df;
        let f_next = eval(b_next, &mut stats)?;
        if converged(b_cur, b_next, f_next, prob.tol) {
            return finish(b_next, iteration, f_next, stats, prob, false);
        }
        (b_prev, f_prev) = (b_cur, f_cur);
        (b_cur, f_cur) = (b_next, f_next);
    }
    Err(ShootingError::MaxIterations { iterations: prob.max_iter, beta: b_cur, stats })
}

/// Newton iteration on `F` started from `beta0`.
pub fn solve_newton(beta0: f64, prob: &ShootingProblem) -> Result<ShootingResult, ShootingError> {
    prob.validate()?;
    let mut stats = IvpStats::default();
    let eval = |beta: f64, stats: &mut IvpStats| -> Result<(f64, f64), ShootingError> {
        match shoot_residual_and_derivative(beta, prob) {
            Ok((f, df, s)) => {
                *stats += s;
                Ok((f, df))
            }
            Err(ShootingError::Overflow { beta, xi, stats: s }) => {
                *stats += s;
                Err(ShootingError::Overflow { beta, xi, stats: *stats })
            }
            Err(e) => Err(e),
        }
    };

    let mut beta = beta0;
    let (mut f, mut df) = eval(beta, &mut stats)?;
    for iteration in 1..=prob.max_iter {
        if df.abs() < SINGULAR_DERIVATIVE || !df.is_finite() {
            return Err(ShootingError::SingularDerivative { beta, stats });
        }
        let next = beta - f / df;
        let (f_next, df_next) = eval(next, &mut stats)?;
        if converged(beta, next, f_next, prob.tol) {
            return finish(next, iteration, f_next, stats, prob, true);
        }
        (beta, f, df) = (next, f_next, df_next);
    }
    Err(ShootingError::MaxIterations { iterations: prob.max_iter, beta, stats })
}
