//! The western-boundary-layer model of wind-driven ocean circulation.
//!
//! The third-order equation
//!
//! ```text
//! u''' = b (u'^2 - u u'') + u - 1,   xi in [0, inf),   u(inf) = 1
//! ```
//!
//! is written as the first-order system `u1' = u2, u2' = u3,
//! u3' = b (u2^2 - u1 u3) + u1 - 1`. Two wall conditions are supported:
//! rigid (`u(0) = u'(0) = 0`) and stress-free (`u(0) = u''(0) = 0`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Problem parameters. `b` measures the strength of the nonlinearity;
/// `b = 0` is the linear Munk layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub b: f64,
}

impl ModelParams {
    /// # Panics
    ///
    /// Panics if `b` is negative or not finite.
    pub fn new(b: f64) -> Self {
        assert!(b.is_finite() && b >= 0.0, "b must be finite and non-negative, got {b}");
        Self { b }
    }

    /// Builds the reduced parameter `b = pi (gamma / kappa^2)^(1/3)` from the
    /// inertial (`gamma`) and viscous (`kappa`) layer widths.
    pub fn from_physical(gamma: f64, kappa: f64) -> Self {
        assert!(gamma >= 0.0 && kappa > 0.0, "need gamma >= 0 and kappa > 0");
        Self::new(std::f64::consts::PI * (gamma / (kappa * kappa)).cbrt())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { b: 2.0 }
    }
}

/// Wall boundary condition at `xi = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcKind {
    /// Rigid wall: `u(0) = u'(0) = 0`; the missing datum is `u''(0)`.
    NoSlip,
    /// Stress-free wall: `u(0) = u''(0) = 0`; the missing datum is `u'(0)`.
    Slip,
}

impl BcKind {
    pub const ALL: [BcKind; 2] = [BcKind::NoSlip, BcKind::Slip];

    /// Index (0-based) of the state component that carries the missing
    /// initial condition.
    pub fn missing_slot(self) -> usize {
        match self {
            BcKind::NoSlip => 2,
            BcKind::Slip => 1,
        }
    }

    /// Index of the state component fixed to zero at the wall besides `u1`.
    pub fn fixed_slot(self) -> usize {
        match self {
            BcKind::NoSlip => 1,
            BcKind::Slip => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BcKind::NoSlip => "no-slip",
            BcKind::Slip => "slip",
        }
    }
}

impl fmt::Display for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BcKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "no-slip" | "noslip" | "rigid" => Ok(BcKind::NoSlip),
            "slip" | "stress-free" | "slippery" => Ok(BcKind::Slip),
            other => Err(format!("unknown boundary condition `{other}` (expected no-slip or slip)")),
        }
    }
}

/// `(u, du/dxi, d2u/dxi2)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State3 {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl State3 {
    pub const FAR_FIELD: State3 = State3 { u1: 1.0, u2: 0.0, u3: 0.0 };

    pub const fn new(u1: f64, u2: f64, u3: f64) -> Self {
        Self { u1, u2, u3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.u1, self.u2, self.u3]
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite() && self.u3.is_finite()
    }
}

impl From<[f64; 3]> for State3 {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<&[f64]> for State3 {
    fn from(a: &[f64]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Base state plus its sensitivities `(du1/dbeta, du2/dbeta, du3/dbeta)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State6 {
    pub base: State3,
    pub s4: f64,
    pub s5: f64,
    pub s6: f64,
}

impl State6 {
    pub fn to_array(self) -> [f64; 6] {
        [self.base.u1, self.base.u2, self.base.u3, self.s4, self.s5, self.s6]
    }
}

impl From<[f64; 6]> for State6 {
    fn from(a: [f64; 6]) -> Self {
        Self { base: State3::new(a[0], a[1], a[2]), s4: a[3], s5: a[4], s6: a[5] }
    }
}

pub type Matrix3 = [[f64; 3]; 3];

/// Right-hand side of the first-order system. The system is autonomous, so
/// `_xi` is ignored.
#[inline]
pub fn rhs(_xi: f64, u: &State3, p: &ModelParams) -> State3 {
    State3 {
        u1: u.u2,
        u2: u.u3,
        u3: p.b * (u.u2 * u.u2 - u.u1 * u.u3) + u.u1 - 1.0,
    }
}

/// `d rhs / d u`, row-major.
#[inline]
pub fn rhs_jacobian(_xi: f64, u: &State3, p: &ModelParams) -> Matrix3 {
    [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0 - p.b * u.u3, 2.0 * p.b * u.u2, -p.b * u.u1],
    ]
}

/// The system augmented with its first variational equation with respect to
/// the missing initial condition.
#[inline]
pub fn rhs_variational(xi: f64, y: &State6, p: &ModelParams) -> State6 {
    let u = &y.base;
    State6 {
        base: rhs(xi, u, p),
        s4: y.s5,
        s5: y.s6,
        s6: p.b * (2.0 * u.u2 * y.s5 - u.u3 * y.s4 - u.u1 * y.s6) + y.s4,
    }
}

/// Initial state of the shooting IVP with `beta` in the missing slot.
pub fn bc_initial(kind: BcKind, beta: f64) -> State3 {
    match kind {
        BcKind::NoSlip => State3::new(0.0, 0.0, beta),
        BcKind::Slip => State3::new(0.0, beta, 0.0),
    }
}

/// Initial state of the augmented IVP: the sensitivity block is the unit
/// vector in the missing slot.
pub fn bc_initial_variational(kind: BcKind, beta: f64) -> State6 {
    let base = bc_initial(kind, beta);
    match kind {
        BcKind::NoSlip => State6 { base, s4: 0.0, s5: 0.0, s6: 1.0 },
        BcKind::Slip => State6 { base, s4: 0.0, s5: 1.0, s6: 0.0 },
    }
}

/// Sign branch of the closed-form approximation for the missing initial
/// condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Closed-form approximation of the missing initial condition, principal
/// (`+`) branch: `u''(0) ~ sqrt(2 / (1 + sqrt(1 + 4b/3)))` for the rigid wall
/// and `u'(0) ~ 2 / (1 + sqrt(1 + 10b/3))` for the stress-free wall.
pub fn approx_missing_init(kind: BcKind, b: f64) -> f64 {
    approx_missing_init_branch(kind, b, Branch::Plus)
        .expect("principal branch is defined for every b >= 0")
}

/// Either branch of the closed-form approximation. The `-` branch is only a
/// diagnostic: it is undefined at `b = 0` and gives a negative square for
/// the rigid wall, in which case `None` is returned.
pub fn approx_missing_init_branch(kind: BcKind, b: f64, branch: Branch) -> Option<f64> {
    assert!(b >= 0.0, "b must be non-negative");
    let slope = match kind {
        BcKind::NoSlip => 4.0 / 3.0,
        BcKind::Slip => 10.0 / 3.0,
    };
    let root = (1.0 + slope * b).sqrt();
    let denom = match branch {
        Branch::Plus => 1.0 + root,
        Branch::Minus => 1.0 - root,
    };
    if denom == 0.0 {
        return None;
    }
    let value = 2.0 / denom;
    match kind {
        BcKind::NoSlip if value < 0.0 => None,
        BcKind::NoSlip => Some(value.sqrt()),
        BcKind::Slip => Some(value),
    }
}

/// Bounded solution of the linear (`b = 0`) problem, written as
/// `u = 1 + Re[C exp(lambda xi)]` with `lambda` the decaying characteristic
/// root of `r^3 = 1`.
#[derive(Debug, Clone, Copy)]
pub struct MunkSolution {
    lambda: Complex64,
    coeff: Complex64,
}

impl MunkSolution {
    pub fn new(kind: BcKind) -> Self {
        // r^3 = 1: r = 1 (growing) and r = -1/2 +- i sqrt(3)/2 (decaying pair).
        let lambda = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        debug_assert!(lambda.re < 0.0);
        // With C = A - iB, the k-th derivative at 0 is Re[C lambda^k]
        //   = A Re(lambda^k) + B Im(lambda^k).
        // Conditions: u(0) = 0  -> A = -1; the fixed derivative slot -> 0.
        let k = kind.fixed_slot() as i32;
        let lk = lambda.powi(k);
        let a = -1.0;
        let b = -a * lk.re / lk.im;
        Self { lambda, coeff: Complex64::new(a, -b) }
    }

    /// `(A, B)` in `u = 1 + exp(-xi/2) (A cos(sqrt3 xi/2) + B sin(sqrt3 xi/2))`.
    pub fn coefficients(&self) -> (f64, f64) {
        (self.coeff.re, -self.coeff.im)
    }

    /// k-th derivative of `u` at `xi`.
    pub fn derivative(&self, k: u32, xi: f64) -> f64 {
        let value = (self.coeff * self.lambda.powu(k) * (self.lambda * xi).exp()).re;
        if k == 0 {
            1.0 + value
        } else {
            value
        }
    }

    pub fn state(&self, xi: f64) -> State3 {
        if xi.is_infinite() {
            return State3::FAR_FIELD;
        }
        State3::new(self.derivative(0, xi), self.derivative(1, xi), self.derivative(2, xi))
    }

    /// The exact missing initial condition (1 for both walls).
    pub fn missing_init(&self, kind: BcKind) -> f64 {
        self.state(0.0).to_array()[kind.missing_slot()]
    }
}

/// Closed-form state of the linear model at `xi`.
pub fn munk_exact(kind: BcKind, xi: f64) -> State3 {
    MunkSolution::new(kind).state(xi)
}

/// Decay of the linearization `w''' + b w'' - w = 0` about the far field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldDecay {
    /// Slowest decay rate among the decaying modes.
    pub rate: f64,
    /// Whether the decaying modes are a complex pair.
    pub oscillatory: bool,
}

/// Far-field decay at `b`. The characteristic polynomial `l^3 + b l^2 - 1`
/// has one positive root `r`; the decaying modes solve
/// `l^2 + (b + r) l + 1/r = 0`.
pub fn far_field_decay(b: f64) -> FarFieldDecay {
    assert!(b.is_finite() && b >= 0.0, "b must be finite and non-negative, got {b}");
    // r in (0, 1]: the cubic is -1 at 0 and b >= 0 at 1.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid * mid * (mid + b) - 1.0 < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let s = b + r;
    let disc = s * s - 4.0 / r;
    if disc < 0.0 {
        FarFieldDecay { rate: 0.5 * s, oscillatory: true }
    } else {
        FarFieldDecay { rate: 0.5 * (s - disc.sqrt()), oscillatory: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rhs_examples() {
        let p = ModelParams::new(2.0);
        assert_eq!(rhs(0.0, &State3::FAR_FIELD, &p), State3::new(0.0, 0.0, 0.0));
        assert_eq!(rhs(0.0, &State3::default(), &p), State3::new(0.0, 0.0, -1.0));
        let f = rhs(3.0, &State3::new(0.5, 0.2, 0.1), &p);
        assert!(close(f.u1, 0.2, 1e-15) && close(f.u2, 0.1, 1e-15) && close(f.u3, -0.52, 1e-15));
    }

    #[test]
    fn far_field_is_equilibrium_for_any_b() {
        for b in [0.0, 0.5, 2.0, 17.0] {
            let f = rhs(0.0, &State3::FAR_FIELD, &ModelParams::new(b));
            assert_eq!(f.to_array(), [0.0; 3]);
        }
    }

    #[test]
    fn jacobian_examples() {
        let j = rhs_jacobian(0.0, &State3::FAR_FIELD, &ModelParams::new(2.0));
        assert_eq!(j, [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, -2.0]]);
        let j = rhs_jacobian(0.0, &State3::default(), &ModelParams::new(0.0));
        assert_eq!(j, [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn variational_examples() {
        let p = ModelParams::new(2.0);
        let y = State6 { base: State3::new(0.3, -0.2, 0.7), ..Default::default() };
        let f = rhs_variational(0.0, &y, &p);
        assert_eq!((f.s4, f.s5, f.s6), (0.0, 0.0, 0.0));
        let y = State6 { base: State3::FAR_FIELD, s4: 0.0, s5: 0.0, s6: 1.0 };
        let f = rhs_variational(0.0, &y, &p);
        assert_eq!((f.s4, f.s5, f.s6), (0.0, 1.0, -2.0));
    }

    #[test]
    fn initial_states() {
        assert_eq!(bc_initial(BcKind::NoSlip, 0.826111), State3::new(0.0, 0.0, 0.826111));
        assert_eq!(bc_initial(BcKind::Slip, 0.528885), State3::new(0.0, 0.528885, 0.0));
        assert_eq!(bc_initial(BcKind::NoSlip, 0.0), State3::default());
        let v = bc_initial_variational(BcKind::NoSlip, 0.5).to_array();
        assert_eq!(v, [0.0, 0.0, 0.5, 0.0, 0.0, 1.0]);
        let v = bc_initial_variational(BcKind::Slip, 0.5).to_array();
        assert_eq!(v, [0.0, 0.5, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn closed_form_approximations() {
        assert!(close(approx_missing_init(BcKind::NoSlip, 2.0), 0.828336, 5e-7));
        assert!(close(approx_missing_init(BcKind::Slip, 2.0), 0.530662, 5e-7));
        assert_eq!(approx_missing_init(BcKind::NoSlip, 0.0), 1.0);
        assert_eq!(approx_missing_init(BcKind::Slip, 0.0), 1.0);
    }

    #[test]
    fn minus_branch_diagnostics() {
        assert_eq!(approx_missing_init_branch(BcKind::Slip, 0.0, Branch::Minus), None);
        assert_eq!(approx_missing_init_branch(BcKind::NoSlip, 2.0, Branch::Minus), None);
        let m = approx_missing_init_branch(BcKind::Slip, 2.0, Branch::Minus).unwrap();
        assert!(m < 0.0);
    }

    #[test]
    fn from_physical_matches_reduction() {
        let p = ModelParams::from_physical(1e-3, 1e-3);
        let expected = std::f64::consts::PI * (1e-3f64 / 1e-6).cbrt();
        assert!(close(p.b, expected, 1e-12));
    }

    #[test]
    fn munk_coefficients_from_roots() {
        let s3 = 3f64.sqrt();
        let (a, b) = MunkSolution::new(BcKind::NoSlip).coefficients();
        assert!(close(a, -1.0, 1e-15) && close(b, -1.0 / s3, 1e-14));
        let (a, b) = MunkSolution::new(BcKind::Slip).coefficients();
        assert!(close(a, -1.0, 1e-15) && close(b, 1.0 / s3, 1e-14));
    }

    #[test]
    fn munk_boundary_values() {
        let s = munk_exact(BcKind::NoSlip, 0.0);
        assert!(close(s.u1, 0.0, 1e-15) && close(s.u2, 0.0, 1e-15) && close(s.u3, 1.0, 1e-14));
        let s = munk_exact(BcKind::Slip, 0.0);
        assert!(close(s.u1, 0.0, 1e-15) && close(s.u2, 1.0, 1e-14) && close(s.u3, 0.0, 1e-15));
        for kind in BcKind::ALL {
            assert_eq!(munk_exact(kind, f64::INFINITY), State3::FAR_FIELD);
            let far = munk_exact(kind, 80.0);
            assert!(close(far.u1, 1.0, 1e-15) && far.u2.abs() < 1e-15);
            assert_eq!(MunkSolution::new(kind).missing_init(kind).round(), 1.0);
        }
    }

    #[test]
    fn munk_satisfies_linear_ode() {
        // Independent check: closed-form trig expression, differentiated by hand.
        let s3 = 3f64.sqrt();
        for kind in BcKind::ALL {
            let sol = MunkSolution::new(kind);
            let (a, b) = sol.coefficients();
            for i in 0..50 {
                let xi = 0.3 * i as f64;
                let u = 1.0 + (-xi / 2.0).exp() * (a * (s3 * xi / 2.0).cos() + b * (s3 * xi / 2.0).sin());
                assert!(close(sol.derivative(0, xi), u, 1e-13));
                let residual = sol.derivative(3, xi) - sol.derivative(0, xi) + 1.0;
                assert!(residual.abs() < 1e-10, "xi={xi}: {residual}");
            }
        }
    }

    #[test]
    fn bc_kind_parsing() {
        assert_eq!("no-slip".parse::<BcKind>().unwrap(), BcKind::NoSlip);
        assert_eq!("slip".parse::<BcKind>().unwrap(), BcKind::Slip);
        assert!("sticky".parse::<BcKind>().is_err());
    }

    #[test]
    fn far_field_decay_rates() {
        // b = 2: roots 0.618.., -1, -1.618..
        let d = far_field_decay(2.0);
        assert!(!d.oscillatory);
        assert!((d.rate - 1.0).abs() < 1e-12, "{}", d.rate);
        // b = 0: roots are the cube roots of unity; the decaying pair has
        // real part -1/2.
        let d = far_field_decay(0.0);
        assert!(d.oscillatory);
        assert!((d.rate - 0.5).abs() < 1e-12);
        let t = (27.0f64 / 4.0).cbrt();
        assert!(far_field_decay(t - 1e-6).oscillatory);
        assert!(!far_field_decay(t + 1e-6).oscillatory);
    }
}
