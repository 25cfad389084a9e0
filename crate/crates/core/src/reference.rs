//! Published reference values for the ocean model at `b = 2` and the
//! tolerances used to judge reproductions. The CLI tables and the acceptance
//! tests both read from here.

use crate::model::BcKind;

/// Configuration of one comparison-table row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableConfig {
    ShootSecant,
    ShootNewton,
    Fbf { intervals: usize },
    Qug { intervals: usize },
}

impl TableConfig {
    pub fn group(self) -> Group {
        match self {
            TableConfig::ShootSecant | TableConfig::ShootNewton => Group::Shooting,
            TableConfig::Fbf { .. } => Group::Fbf,
            TableConfig::Qug { .. } => Group::Qug,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TableConfig::ShootSecant => "Shooting-secant",
            TableConfig::ShootNewton => "Shooting-Newton",
            TableConfig::Fbf { .. } => "FBF",
            TableConfig::Qug { .. } => "QUG",
        }
    }
}

/// Row groups that `tables --skip` can drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Shooting,
    Fbf,
    Qug,
}

impl std::str::FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "shooting" => Ok(Group::Shooting),
            "fbf" => Ok(Group::Fbf),
            "qug" => Ok(Group::Qug),
            other => Err(format!("unknown group '{other}' (expected shooting, fbf or qug)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableEntry {
    pub kind: BcKind,
    pub config: TableConfig,
    pub beta: f64,
    pub beta_tol: f64,
    pub iterations: usize,
    pub iteration_slack: usize,
}

const SHOOT_TOL: f64 = 5e-4;
const FD_TOL: f64 = 2e-5;

const fn entry(kind: BcKind, config: TableConfig, beta: f64, beta_tol: f64, iterations: usize, iteration_slack: usize) -> TableEntry {
    TableEntry { kind, config, beta, beta_tol, iterations, iteration_slack }
}

/// Both comparison tables, no-slip rows first.
pub const COMPARISON: [TableEntry; 12] = [
    entry(BcKind::NoSlip, TableConfig::ShootSecant, 0.826111, SHOOT_TOL, 12, 2),
    entry(BcKind::NoSlip, TableConfig::ShootNewton, 0.826111, SHOOT_TOL, 7, 2),
    entry(BcKind::NoSlip, TableConfig::Fbf { intervals: 2000 }, 0.826142, FD_TOL, 11, 1),
    entry(BcKind::NoSlip, TableConfig::Fbf { intervals: 4000 }, 0.826140, FD_TOL, 11, 1),
    entry(BcKind::NoSlip, TableConfig::Qug { intervals: 200 }, 0.826180, FD_TOL, 5, 1),
    entry(BcKind::NoSlip, TableConfig::Qug { intervals: 400 }, 0.826150, FD_TOL, 5, 1),
    entry(BcKind::Slip, TableConfig::ShootSecant, 0.528885, SHOOT_TOL, 13, 2),
    entry(BcKind::Slip, TableConfig::ShootNewton, 0.528910, SHOOT_TOL, 8, 2),
    entry(BcKind::Slip, TableConfig::Fbf { intervals: 2000 }, 0.528921, FD_TOL, 11, 1),
    entry(BcKind::Slip, TableConfig::Fbf { intervals: 4000 }, 0.528921, FD_TOL, 11, 1),
    entry(BcKind::Slip, TableConfig::Qug { intervals: 200 }, 0.528927, FD_TOL, 4, 1),
    entry(BcKind::Slip, TableConfig::Qug { intervals: 400 }, 0.528922, FD_TOL, 4, 1),
];

/// Free-boundary slope used in the comparison tables.
pub const TABLE_EPS: f64 = 1e-5;
/// Scale of the quasi-uniform map used in the comparison tables.
pub const TABLE_C: f64 = 5.0;

/// One row of the free-boundary tables (`J = 2000`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbfEntry {
    pub kind: BcKind,
    pub eps: f64,
    pub xi_eps: f64,
    pub beta: f64,
    pub iterations: usize,
}

const fn fbf(kind: BcKind, eps: f64, xi_eps: f64, beta: f64, iterations: usize) -> FbfEntry {
    FbfEntry { kind, eps, xi_eps, beta, iterations }
}

pub const FBF_INTERVALS: usize = 2000;
pub const FBF_XI_TOL: f64 = 1e-4;
pub const FBF_BETA_TOL: f64 = 2e-5;
pub const FBF_ITERATION_SLACK: usize = 1;

pub const FBF_TABLE: [FbfEntry; 8] = [
    fbf(BcKind::NoSlip, 1e-2, 6.485761, 0.826184, 7),
    fbf(BcKind::NoSlip, 1e-3, 8.792991, 0.826141, 8),
    fbf(BcKind::NoSlip, 1e-4, 11.098635, 0.826141, 10),
    fbf(BcKind::NoSlip, 1e-5, 13.402219, 0.826142, 11),
    fbf(BcKind::Slip, 1e-2, 5.828307, 0.528970, 7),
    fbf(BcKind::Slip, 1e-3, 8.132813, 0.528922, 8),
    fbf(BcKind::Slip, 1e-4, 10.437875, 0.528921, 9),
    fbf(BcKind::Slip, 1e-5, 12.741323, 0.528921, 11),
];

/// `eps` sequence of the continuation runs.
pub const CONTINUATION_EPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
/// Newton iterations per continuation step, for both boundary kinds.
pub const CONTINUATION_ITERATIONS: [usize; 4] = [7, 6, 6, 6];
pub const CONTINUATION_SLACK: usize = 1;

/// Published cost of the shooting runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEntry {
    pub kind: BcKind,
    pub config: TableConfig,
    pub steps: usize,
    pub rejections: usize,
    pub evaluations: usize,
    pub iterations: usize,
}

pub const SHOOTING_COST: [CostEntry; 4] = [
    CostEntry { kind: BcKind::NoSlip, config: TableConfig::ShootSecant, steps: 109111, rejections: 142, evaluations: 327771, iterations: 12 },
    CostEntry { kind: BcKind::NoSlip, config: TableConfig::ShootNewton, steps: 1489, rejections: 79, evaluations: 4711, iterations: 7 },
    CostEntry { kind: BcKind::Slip, config: TableConfig::ShootSecant, steps: 28461, rejections: 208, evaluations: 86020, iterations: 13 },
    CostEntry { kind: BcKind::Slip, config: TableConfig::ShootNewton, steps: 6263, rejections: 114, evaluations: 19139, iterations: 8 },
];

/// Evaluation counts must be within this factor of the published ones.
pub const COST_FACTOR: f64 = 10.0;

/// Published values of the closed-form approximations at `b = 2`.
pub const APPROXIMATION: [(BcKind, f64); 2] = [(BcKind::NoSlip, 0.828336), (BcKind::Slip, 0.530662)];
pub const APPROXIMATION_TOL: f64 = 5e-7;

/// Agreement with the exact `beta = 1` at `b = 0`.
pub const MUNK_TOL: f64 = 1e-4;

/// Accepted range of `|beta(J) - beta(2J)| / |beta(2J) - beta(4J)|`.
pub const ORDER_RATIO: (f64, f64) = (2.0, 8.0);

/// Default secant seeds `(beta0, beta1)`; Newton starts from `beta0`.
pub fn default_seeds(kind: BcKind) -> (f64, f64) {
    match kind {
        BcKind::NoSlip => (1.0, 2.0),
        BcKind::Slip => (0.8, 1.0),
    }
}

pub fn approximation(kind: BcKind) -> f64 {
    APPROXIMATION.iter().find(|(k, _)| *k == kind).map(|&(_, v)| v).expect("both kinds listed")
}

pub fn within(value: f64, reference: f64, tol: f64) -> bool {
    (value - reference).abs() <= tol
}

pub fn within_count(value: usize, reference: usize, slack: usize) -> bool {
    value.abs_diff(reference) <= slack
}
