//! Adaptive Bogacki-Shampine 3(2) integrator.
//!
//! The pair is propagated with the third-order solution (local
//! extrapolation) and uses first-same-as-last, so every attempted step costs
//! three new right-hand-side evaluations and a whole integration costs
//! `3 * (accepted + rejected) + 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Magnitude beyond which a state component is treated as a divergent
/// trajectory.
pub const OVERFLOW_LIMIT: f64 = 1e12;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Overrides the automatic starting step.
    pub initial_step: Option<f64>,
}

impl Default for IvpOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-3, abs_tol: 1e-6, max_steps: 1_000_000, initial_step: None }
    }
}

impl IvpOptions {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self { rel_tol, abs_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IvpStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

impl std::ops::AddAssign for IvpStats {
    fn add_assign(&mut self, rhs: Self) {
        self.accepted_steps += rhs.accepted_steps;
        self.rejected_steps += rhs.rejected_steps;
        self.rhs_evaluations += rhs.rhs_evaluations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum IvpError {
    #[error("step limit of {max_steps} reached at t = {t}")]
    StepCountExceeded { t: f64, max_steps: usize, stats: IvpStats },
    #[error("solution diverged (|y| > {OVERFLOW_LIMIT:e}) at t = {t}")]
    Overflow { t: f64, stats: IvpStats },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64, stats: IvpStats },
    #[error("invalid integration request: {0}")]
    InvalidInput(&'static str),
}

impl IvpError {
    /// Work done before the failure, if any.
    pub fn stats(&self) -> IvpStats {
        match *self {
            IvpError::StepCountExceeded { stats, .. }
            | IvpError::Overflow { stats, .. }
            | IvpError::StepSizeUnderflow { stats, .. } => stats,
            IvpError::InvalidInput(_) => IvpStats::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsStep<const N: usize> {
    /// Second-order solution.
    pub low: [f64; N],
    /// Third-order solution.
    pub high: [f64; N],
    /// Derivative at the end of the step, `f(t + h, high)`.
    pub end_slope: [f64; N],
    /// Right-hand-side evaluations spent on this step.
    pub evaluations: usize,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

/// One embedded step with a known slope `k1 = f(t, y)`.
fn step_with_slope<const N: usize, F>(rhs: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64) -> BsStep<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k2 = rhs(t + 0.5 * h, &axpy(y, h, &[(0.5, k1)]));
    let k3 = rhs(t + 0.75 * h, &axpy(y, h, &[(0.75, &k2)]));
    let high = axpy(y, h, &[(2.0 / 9.0, k1), (1.0 / 3.0, &k2), (4.0 / 9.0, &k3)]);
    let k4 = rhs(t + h, &high);
    let low = axpy(y, h, &[(7.0 / 24.0, k1), (0.25, &k2), (1.0 / 3.0, &k3), (0.125, &k4)]);
    BsStep { low, high, end_slope: k4, evaluations: 3 }
}

/// A single Bogacki-Shampine step from `(t, y)` with size `h`, including the
/// initial slope evaluation.
pub fn step_bs23<const N: usize, F>(mut rhs: F, t: f64, y: &[f64; N], h: f64) -> BsStep<N>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = rhs(t, y);
    let mut step = step_with_slope(&mut rhs, t, y, &k1, h);
    step.evaluations += 1;
    step
}

fn error_norm<const N: usize>(step: &BsStep<N>, y: &[f64; N], opts: &IvpOptions) -> f64 {
    let mut sum = 0.0;
    for i in 0..N {
        let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(step.high[i].abs());
        let e = (step.high[i] - step.low[i]) / scale;
        sum += e * e;
    }
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize>(y0: &[f64; N], f0: &[f64; N], span: f64, opts: &IvpOptions) -> f64 {
    if let Some(h) = opts.initial_step {
        return h.min(span);
    }
    // Scaled slope, with |y| floored at abs_tol / rel_tol.
    let threshold = opts.abs_tol / opts.rel_tol;
    let rate = f0
        .iter()
        .zip(y0)
        .map(|(f, y)| f.abs() / y.abs().max(threshold))
        .fold(0.0, f64::max)
        / (0.8 * opts.rel_tol.cbrt());
    let h = 0.1 * span;
    if h * rate > 1.0 {
        1.0 / rate
    } else {
        h
    }
}

fn diverged<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().any(|v| !v.is_finite() || v.abs() > OVERFLOW_LIMIT)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` and records the state at
/// each of the increasing `outputs` (all inside `(t0, t_end]`). The step
/// sequence does not depend on `outputs`: samples strictly inside a step come
/// from the cubic Hermite interpolant through its end states and slopes.
pub fn integrate_with_outputs<const N: usize, F>(
    mut rhs: F,
    t0: f64,
    t_end: f64,
    y0: [f64; N],
    outputs: &[f64],
    opts: &IvpOptions,
) -> Result<(Vec<[f64; N]>, IvpStats), IvpError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    if !(t_end > t0) {
        return Err(IvpError::InvalidInput("t_end must exceed t0"));
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(IvpError::InvalidInput("tolerances must be positive"));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(IvpError::InvalidInput("initial state must be finite"));
    }
    if outputs.windows(2).any(|w| !(w[0] < w[1])) || outputs.iter().any(|&o| !(o > t0 && o <= t_end)) {
        return Err(IvpError::InvalidInput("outputs must increase inside (t0, t_end]"));
    }

    let mut stats = IvpStats::default();
    let mut t = t0;
    let mut y = y0;
    let mut slope = rhs(t, &y);
    stats.rhs_evaluations += 1;
    let mut h = initial_step(&y, &slope, t_end - t0, opts);
    let mut recorded = Vec::with_capacity(outputs.len());
    let mut next_out = 0;
    let mut just_rejected = false;

    while t < t_end {
        if stats.accepted_steps + stats.rejected_steps >= opts.max_steps {
            return Err(IvpError::StepCountExceeded { t, max_steps: opts.max_steps, stats });
        }
        let mut last = false;
        // Stretch by up to 10% to avoid a sliver step before the end.
        if t + 1.1 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(IvpError::StepSizeUnderflow { t, stats });
        }

        let step = step_with_slope(&mut rhs, t, &y, &slope, h);
        stats.rhs_evaluations += step.evaluations;
        let err = error_norm(&step, &y, opts);

        if err <= 1.0 {
            stats.accepted_steps += 1;
            let t_new = if last { t_end } else { t + h };
            if diverged(&step.high) {
                return Err(IvpError::Overflow { t: t_new, stats });
            }
            while next_out < outputs.len() && outputs[next_out] <= t_new {
                let o = outputs[next_out];
                recorded.push(if o == t_new {
                    step.high
                } else {
                    hermite(t, &y, &slope, t_new, &step.high, &step.end_slope, o)
                });
                next_out += 1;
            }
            t = t_new;
            y = step.high;
            slope = step.end_slope;
            let mut factor = if err == 0.0 { MAX_FACTOR } else { SAFETY * err.powf(-1.0 / 3.0) };
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if just_rejected {
                factor = factor.min(1.0);
            }
            just_rejected = false;
            h *= factor;
        } else {
            stats.rejected_steps += 1;
            if !err.is_finite() {
                if diverged(&step.high) {
                    return Err(IvpError::Overflow { t, stats });
                }
                h *= MIN_FACTOR;
            } else {
                h *= (SAFETY * err.powf(-1.0 / 3.0)).clamp(MIN_FACTOR, 1.0);
            }
            just_rejected = true;
        }
    }
    Ok((recorded, stats))
}

/// Cubic Hermite interpolant on `[ta, tb]` evaluated at `t`.
fn hermite<const N: usize>(ta: f64, ya: &[f64; N], fa: &[f64; N], tb: f64, yb: &[f64; N], fb: &[f64; N], t: f64) -> [f64; N] {
    let h = tb - ta;
    let s = (t - ta) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * ya[i] + h * h10 * fa[i] + h01 * yb[i] + h * h11 * fb[i];
    }
    out
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end` and returns the final
/// state with step accounting.
pub fn integrate<const N: usize, F>(
    rhs: F,
    t0: f64,
    t_end: f64,
    y0: [f64; N],
    opts: &IvpOptions,
) -> Result<([f64; N], IvpStats), IvpError>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let (mut states, stats) = integrate_with_outputs(rhs, t0, t_end, y0, &[t_end], opts)?;
    Ok((states.pop().expect("final state is always recorded"), stats))
}
