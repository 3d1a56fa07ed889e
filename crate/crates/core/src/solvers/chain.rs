//! Block-Thomas solve of the chain dual system.
//!
//! When the joints form a chain, re-indexing them along the path makes the
//! dual matrix block-tridiagonal; forward block elimination and back
//! substitution solve it in O(K) block operations.

use super::{DualSystem, SolveStats, SolverError};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Cholesky with a Tikhonov retry: redundant (consistent) constraint rows
/// make dual diagonal blocks singular; a tiny diagonal shift picks one of
/// the equivalent multiplier solutions without disturbing the primal.
pub(super) fn factor_spd(matrix: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(chol) = matrix.clone().cholesky() {
        return Some(chol);
    }
    let scale = matrix.diagonal().amax().max(1e-300);
    for eps in [1e-12, 1e-10, 1e-8] {
        let shifted = matrix + DMatrix::identity(matrix.nrows(), matrix.ncols()) * (eps * scale);
        if let Some(chol) = shifted.cholesky() {
            return Some(chol);
        }
    }
    None
}

/// Solve a block-tridiagonal system given by its diagonal blocks `diag`,
/// upper couplings `upper[k] = S(k, k+1)`, and right-hand sides.
pub fn solve_block_tridiagonal(
    diag: &[DMatrix<f64>],
    upper: &[Option<DMatrix<f64>>],
    rhs: &[DVector<f64>],
    joint_ids: &[usize],
) -> Result<(Vec<DVector<f64>>, SolveStats), SolverError> {
    let n = diag.len();
    assert_eq!(upper.len() + 1, n.max(1));
    let mut stats = SolveStats::default();
    let mut factors: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(n);
    let mut diag_mod: Vec<DMatrix<f64>> = diag.to_vec();
    let mut rhs_mod: Vec<DVector<f64>> = rhs.to_vec();

    // forward elimination
    for k in 0..n {
        let chol = factor_spd(&diag_mod[k]).ok_or(SolverError::SingularDiagonalBlock {
            joint: joint_ids[k],
        })?;
        stats.block_factorizations += 1;
        if k + 1 < n {
            if let Some(b) = &upper[k] {
                // L = Bᵀ D̃⁻¹ applied as D̃⁻¹ B once
                let dinv_b = chol.solve(b);
                stats.block_multiplies += 2;
                let update = b.transpose() * &dinv_b;
                diag_mod[k + 1] -= &update;
                let rhs_update = dinv_b.transpose() * &rhs_mod[k];
                rhs_mod[k + 1] -= rhs_update;
            }
        }
        factors.push(chol);
    }

    // back substitution
    let mut lambda: Vec<DVector<f64>> = vec![DVector::zeros(0); n];
    for k in (0..n).rev() {
        let mut b = rhs_mod[k].clone();
        if k + 1 < n {
            if let Some(u) = &upper[k] {
                b -= u * &lambda[k + 1];
                stats.block_multiplies += 1;
            }
        }
        lambda[k] = factors[k].solve(&b);
    }
    Ok((lambda, stats))
}

/// Solve the dual system of a chain island: joints are visited in `order`
/// (path order in the joint graph).
pub fn solve_chain(
    dual: &DualSystem,
    order: &[usize],
) -> Result<(Vec<DVector<f64>>, SolveStats), SolverError> {
    let n = order.len();
    let mut diag = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n.saturating_sub(1));
    let mut rhs = Vec::with_capacity(n);
    for (pos, &k) in order.iter().enumerate() {
        diag.push(
            dual.block(k, k)
                .unwrap_or_else(|| DMatrix::zeros(dual.ranks[k], dual.ranks[k])),
        );
        rhs.push(dual.rhs[k].clone());
        if pos + 1 < n {
            upper.push(dual.block(k, order[pos + 1]));
        }
    }
    let (lambda_ordered, stats) = solve_block_tridiagonal(&diag, &upper, &rhs, order)?;
    let mut lambda = vec![DVector::zeros(0); n];
    for (pos, &k) in order.iter().enumerate() {
        lambda[k] = lambda_ordered[pos].clone();
    }
    Ok((lambda, stats))
}
