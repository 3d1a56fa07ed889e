//! Schur-complement solve for loop topologies.
//!
//! The KKT system is partitioned: block A holds every non-breaker body and
//! the joints among them (a chain/forest, solved by the specialized inner
//! solvers); block D holds the breaker bodies and their incident joints. The
//! low-rank Schur complement `S = D − C A⁻¹ Cᵀ` is built column by column
//! through inner solves, solved directly, and back-substituted.

use super::{assemble_dual_with, chain, tree, BodyCtx, IslandSolution, JointCtx, SolveStats, SolverError};
use super::{classify_topology, recover_primal_with, Topology};
use crate::math::Vec12;
use nalgebra::{DMatrix, DVector};

/// Solve the A-partition (chain/forest) with explicit constraint right-hand
/// sides `r` (second KKT row).
fn solve_sub(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    r: &[DVector<f64>],
) -> Result<(Vec<Vec12>, Vec<DVector<f64>>, SolveStats), SolverError> {
    if joints.is_empty() {
        let dq = bodies.iter().map(|b| b.solve(&b.f_a)).collect();
        return Ok((dq, Vec::new(), SolveStats::default()));
    }
    match classify_topology(bodies.len(), joints, 0)? {
        Topology::Chain { order } => {
            let dual = assemble_dual_with(bodies, joints, r);
            let (lambda, stats) = chain::solve_chain(&dual, &order)?;
            let dq = recover_primal_with(bodies, joints, &lambda);
            Ok((dq, lambda, stats))
        }
        Topology::Tree => {
            let sol = tree::solve_tree_with(bodies, joints, false, Some(r))?;
            Ok((sol.dq, sol.lambda, sol.stats))
        }
        _ => {
            // remaining cycles mean the breaker set was insufficient; fall
            // back to the direct dual factorization
            let dual = assemble_dual_with(bodies, joints, r);
            let lambda = dual.solve_dense()?;
            let dq = recover_primal_with(bodies, joints, &lambda);
            Ok((dq, lambda, SolveStats::default()))
        }
    }
}

pub fn solve_loop(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    breakers: &[usize],
    feedback: bool,
) -> Result<IslandSolution, SolverError> {
    let n = bodies.len();
    let is_breaker = {
        let mut v = vec![false; n];
        for &b in breakers {
            v[b] = true;
        }
        v
    };
    let d_joints: Vec<usize> = (0..joints.len())
        .filter(|&k| {
            is_breaker[joints[k].body_a]
                || joints[k].body_b.map(|b| is_breaker[b]).unwrap_or(false)
        })
        .collect();
    let a_joints: Vec<usize> = (0..joints.len())
        .filter(|&k| !d_joints.contains(&k))
        .collect();

    // island-local → A-local body remap
    let a_bodies: Vec<usize> = (0..n).filter(|&b| !is_breaker[b]).collect();
    let mut to_a = vec![usize::MAX; n];
    for (new, &old) in a_bodies.iter().enumerate() {
        to_a[old] = new;
    }

    let sub_bodies = |f_override: Option<&[Vec12]>| -> Vec<BodyCtx<'_>> {
        a_bodies
            .iter()
            .enumerate()
            .map(|(new, &old)| BodyCtx {
                model: bodies[old].model,
                rotation: bodies[old].rotation,
                f_a: match f_override {
                    Some(f) => f[new],
                    None => bodies[old].f_a,
                },
            })
            .collect()
    };
    let sub_joints: Vec<JointCtx> = a_joints
        .iter()
        .map(|&k| JointCtx {
            body_a: to_a[joints[k].body_a],
            body_b: joints[k].body_b.map(|b| to_a[b]),
            rank: joints[k].rank,
            grad_a: joints[k].grad_a.clone(),
            grad_b: joints[k].grad_b.clone(),
            residual: joints[k].residual.clone(),
        })
        .collect();
    let r_zero: Vec<DVector<f64>> = sub_joints
        .iter()
        .map(|j| DVector::zeros(j.rank))
        .collect();
    let r_a: Vec<DVector<f64>> = sub_joints
        .iter()
        .map(|j| {
            if feedback {
                -&j.residual
            } else {
                DVector::zeros(j.rank)
            }
        })
        .collect();

    // D-variable layout: breaker primal blocks then D-joint dual blocks
    let mut d_offsets = Vec::new();
    let mut dim_d = 0;
    for _ in breakers {
        d_offsets.push(dim_d);
        dim_d += 12;
    }
    let mut d_joint_offsets = Vec::new();
    for &k in &d_joints {
        d_joint_offsets.push(dim_d);
        dim_d += joints[k].rank;
    }

    // K_DD
    let mut k_dd = DMatrix::zeros(dim_d, dim_d);
    let mut b_d = DVector::zeros(dim_d);
    for (bi, &b) in breakers.iter().enumerate() {
        let h = bodies[b].model.dense_hessian(&bodies[b].rotation);
        for i in 0..12 {
            for j in 0..12 {
                k_dd[(d_offsets[bi] + i, d_offsets[bi] + j)] = h[(i, j)];
            }
            b_d[d_offsets[bi] + i] = bodies[b].f_a[i];
        }
    }
    for (ki, &k) in d_joints.iter().enumerate() {
        let at = d_joint_offsets[ki];
        for (bi, &b) in breakers.iter().enumerate() {
            if let Some(grad) = joints[k].grad_for(b) {
                k_dd.view_mut((at, d_offsets[bi]), (joints[k].rank, 12))
                    .copy_from(grad);
                k_dd.view_mut((d_offsets[bi], at), (12, joints[k].rank))
                    .copy_from(&grad.transpose());
            }
        }
        if feedback {
            b_d.rows_mut(at, joints[k].rank)
                .copy_from(&(-&joints[k].residual));
        }
    }

    // baseline A solve: w₀ = A⁻¹ b_A
    let base_bodies = sub_bodies(None);
    let (dq0, lam0, mut stats) = solve_sub(&base_bodies, &sub_joints, &r_a)?;

    // coupling applied to an A solution: (C x)[d_joint rows] = Σ ∇C_j δq_j
    let apply_c = |dq_a: &[Vec12]| -> DVector<f64> {
        let mut out = DVector::zeros(dim_d);
        for (ki, &k) in d_joints.iter().enumerate() {
            let at = d_joint_offsets[ki];
            for side in [Some(joints[k].body_a), joints[k].body_b].into_iter().flatten() {
                if is_breaker[side] {
                    continue;
                }
                let grad = joints[k].grad_for(side).expect("incident");
                let contrib = grad * DVector::from_row_slice(dq_a[to_a[side]].as_slice());
                let mut view = out.rows_mut(at, joints[k].rank);
                view += contrib;
            }
        }
        out
    };

    // Schur complement built column by column over the D-joint dual dims
    let mut schur = k_dd.clone();
    for (ki, &k) in d_joints.iter().enumerate() {
        for c in 0..joints[k].rank {
            let col_at = d_joint_offsets[ki] + c;
            // column of Cᵀ: distribute row (k, c) of the coupling onto A bodies
            let mut f_cols: Vec<Vec12> = vec![Vec12::zeros(); a_bodies.len()];
            let mut any = false;
            for side in [Some(joints[k].body_a), joints[k].body_b].into_iter().flatten() {
                if is_breaker[side] {
                    continue;
                }
                let grad = joints[k].grad_for(side).expect("incident");
                f_cols[to_a[side]] += Vec12::from_row_slice(grad.row(c).transpose().as_slice());
                any = true;
            }
            if !any {
                continue;
            }
            let col_bodies = sub_bodies(Some(&f_cols));
            let (dq_col, _, st) = solve_sub(&col_bodies, &sub_joints, &r_zero)?;
            stats.block_multiplies += st.block_multiplies;
            let c_ainv_ct = apply_c(&dq_col);
            for r in 0..dim_d {
                schur[(r, col_at)] -= c_ainv_ct[r];
            }
        }
    }

    let rhs_d = &b_d - apply_c(&dq0);
    let lu = schur.lu();
    let w_d = lu.solve(&rhs_d).ok_or(SolverError::SingularSchur)?;

    // back-substitute: adjust A right-hand sides by Cᵀ w_D and re-solve
    let mut f_adj: Vec<Vec12> = a_bodies.iter().map(|&b| bodies[b].f_a).collect();
    for (ki, &k) in d_joints.iter().enumerate() {
        let lam_k = w_d.rows(d_joint_offsets[ki], joints[k].rank).into_owned();
        for side in [Some(joints[k].body_a), joints[k].body_b].into_iter().flatten() {
            if is_breaker[side] {
                continue;
            }
            let grad = joints[k].grad_for(side).expect("incident");
            let contrib = grad.transpose() * &lam_k;
            f_adj[to_a[side]] -= Vec12::from_row_slice(contrib.as_slice());
        }
    }
    let adj_bodies = sub_bodies(Some(&f_adj));
    let (dq_a, lam_a, st) = solve_sub(&adj_bodies, &sub_joints, &r_a)?;
    stats.block_multiplies += st.block_multiplies;
    let _ = (dq0, lam0);

    // assemble the island solution
    let mut dq = vec![Vec12::zeros(); n];
    for (new, &old) in a_bodies.iter().enumerate() {
        dq[old] = dq_a[new];
    }
    for (bi, &b) in breakers.iter().enumerate() {
        dq[b] = Vec12::from_iterator((0..12).map(|i| w_d[d_offsets[bi] + i]));
    }
    let mut lambda: Vec<DVector<f64>> = joints.iter().map(|j| DVector::zeros(j.rank)).collect();
    for (ki, &k) in d_joints.iter().enumerate() {
        lambda[k] = w_d.rows(d_joint_offsets[ki], joints[k].rank).into_owned();
    }
    for (ai, &k) in a_joints.iter().enumerate() {
        lambda[k] = lam_a[ai].clone();
    }
    Ok(IslandSolution { dq, lambda, stats })
}
