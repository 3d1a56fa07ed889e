//! Dense solve of the full KKT system.
//!
//! Assembles the `(12M + ΣC_k)` symmetric indefinite saddle system with the
//! explicit per-body Hessians `diag₄(R)(M_A/h² + K̄_A)diag₄(Rᵀ)` and solves it
//! by a pivoted dense factorization. This is the equivalence reference for
//! every specialized dual solver; it shares none of their code paths.

use crate::math::Vec12;
use crate::solvers::{BodyCtx, JointCtx, SolverError};
use nalgebra::{DMatrix, DVector};

/// Solve the full KKT system directly. Returns per-body increments and
/// per-joint multipliers.
pub fn dense_kkt_solve(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    feedback: bool,
) -> Result<(Vec<Vec12>, Vec<DVector<f64>>), SolverError> {
    let nq = 12 * bodies.len();
    let mut joint_offsets = Vec::with_capacity(joints.len());
    let mut nl = 0;
    for j in joints {
        joint_offsets.push(nq + nl);
        nl += j.rank;
    }
    let dim = nq + nl;
    let mut kkt = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);

    for (b, body) in bodies.iter().enumerate() {
        let h = body.model.dense_hessian(&body.rotation);
        for i in 0..12 {
            for j in 0..12 {
                kkt[(12 * b + i, 12 * b + j)] = h[(i, j)];
            }
            rhs[12 * b + i] = body.f_a[i];
        }
    }
    for (k, joint) in joints.iter().enumerate() {
        let at = joint_offsets[k];
        for side in [Some(joint.body_a), joint.body_b].into_iter().flatten() {
            let grad = joint.grad_for(side).expect("incident body");
            kkt.view_mut((at, 12 * side), (joint.rank, 12))
                .copy_from(grad);
            kkt.view_mut((12 * side, at), (12, joint.rank))
                .copy_from(&grad.transpose());
        }
        if feedback {
            rhs.rows_mut(at, joint.rank).copy_from(&(-&joint.residual));
        }
    }

    let lu = kkt.full_piv_lu();
    let sol = lu.solve(&rhs).ok_or(SolverError::SingularKkt)?;
    let dq = (0..bodies.len())
        .map(|b| Vec12::from_iterator((0..12).map(|i| sol[12 * b + i])))
        .collect();
    let lambda = joints
        .iter()
        .enumerate()
        .map(|(k, j)| sol.rows(joint_offsets[k], j.rank).into_owned())
        .collect();
    Ok((dq, lambda))
}

/// Relative residual of a (δq, δλ) pair against the KKT equations; used by
/// tests to validate the oracle itself.
pub fn kkt_residual(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    dq: &[Vec12],
    lambda: &[DVector<f64>],
    feedback: bool,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1e-300;
    for (b, body) in bodies.iter().enumerate() {
        let h = body.model.dense_hessian(&body.rotation);
        let mut r = h * dq[b] - body.f_a;
        for (k, joint) in joints.iter().enumerate() {
            if let Some(grad) = joint.grad_for(b) {
                let contrib = grad.transpose() * &lambda[k];
                r += Vec12::from_row_slice(contrib.as_slice());
            }
        }
        worst = worst.max(r.amax());
        scale = scale.max(body.f_a.amax());
    }
    for joint in joints {
        let mut r = if feedback {
            joint.residual.clone()
        } else {
            DVector::zeros(joint.rank)
        };
        for side in [Some(joint.body_a), joint.body_b].into_iter().flatten() {
            let grad = joint.grad_for(side).expect("incident body");
            r += grad * DVector::from_row_slice(dq[side].as_slice());
        }
        worst = worst.max(r.amax());
    }
    worst / scale
}
