//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use bvp_core::block::BorderedBlockMatrix;
use bvp_core::model::{self, ModelParams, State3};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Random bordered chain with entries in `[-1, 1]` and a shifted diagonal.
pub fn random_chain<R: Rng>(rng: &mut R, m: usize, intervals: usize) -> BorderedBlockMatrix {
    let mut a = BorderedBlockMatrix::zeros(m, intervals);
    for x in a.left.iter_mut().chain(&mut a.right).chain(&mut a.bc_first).chain(&mut a.bc_last) {
        *x = rng.random_range(-1.0..1.0);
    }
    for k in 0..intervals {
        for i in 0..m {
            a.left[(k * m + i) * m + i] += 2.0;
        }
    }
    for i in 0..m {
        a.bc_last[i * m + i] += 2.0;
    }
    a
}

/// Dense LU solve of the same system.
pub fn dense_solve(a: &BorderedBlockMatrix, rhs: &[f64]) -> Vec<f64> {
    let n = a.dimension();
    let dense = DMatrix::from_row_slice(n, n, &a.to_dense());
    let x = dense.lu().solve(&DVector::from_column_slice(rhs)).expect("oracle matrix is nonsingular");
    x.iter().copied().collect()
}

/// `max |x - y| / max |y|`.
pub fn relative_error(x: &[f64], y: &[f64]) -> f64 {
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

/// Worst scaled discrepancy between the analytic model Jacobian and central
/// differences of the right-hand side at `u`.
pub fn model_jacobian_discrepancy(u: &State3, p: &ModelParams) -> f64 {
    let jac = model::rhs_jacobian(0.0, u, p);
    let base = u.to_array();
    let mut worst = 0.0f64;
    for col in 0..3 {
        let h = 1e-6 * base[col].abs().max(1.0);
        let (mut plus, mut minus) = (base, base);
        plus[col] += h;
        minus[col] -= h;
        let fp = model::rhs(0.0, &State3::from(plus), p).to_array();
        let fm = model::rhs(0.0, &State3::from(minus), p).to_array();
        for row in 0..3 {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            let scale = 1.0f64.max(fd.abs()).max(jac[row][col].abs());
            worst = worst.max((fd - jac[row][col]).abs() / scale);
        }
    }
    worst
}
