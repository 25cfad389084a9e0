use serde::{Deserialize, Serialize};
use std::fmt;

use crate::model::State3;

/// How the far boundary was represented by a solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Boundary {
    /// Fixed truncated boundary `xi_inf`.
    Truncated(f64),
    /// Computed free boundary `xi_eps`.
    Free(f64),
    /// Last grid node placed at infinity.
    Infinite,
}

impl Boundary {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Boundary::Truncated(v) | Boundary::Free(v) => Some(v),
            Boundary::Infinite => None,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Truncated(v) => write!(f, "xi_inf = {v}"),
            Boundary::Free(v) => write!(f, "xi_eps = {v:.6}"),
            Boundary::Infinite => f.write_str("xi_J = inf"),
        }
    }
}

/// Nodal solution on the finite nodes, plus the state at infinity for
/// solvers that carry it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSolution {
    pub xi: Vec<f64>,
    pub states: Vec<State3>,
    pub at_infinity: Option<State3>,
    /// Missing initial condition read at the wall.
    pub beta: f64,
    pub boundary: Boundary,
}

impl MeshSolution {
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}
