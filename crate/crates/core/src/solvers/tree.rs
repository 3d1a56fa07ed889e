//! Articulated solve for tree (and forest) topologies.
//!
//! Leaf-to-root pass: each body's joint to its parent (stacked with any
//! anchors the body carries) is eliminated through the local Schur complement
//! of the condensed Hessian, accumulating a quadratic model `(Ĥ, f̂)` onto the
//! parent. Root-to-leaf pass: each body solves its local KKT
//!
//! ```text
//! [ Ĥ_j  ∇C_jᵀ ] [δq_j]   [ f̂_j ]
//! [ ∇C_j   0   ] [δλ_j] = [ r_j  ],   r_j = −C − ∇C_p δq_p
//! ```
//!
//! with the parent increment already known. Both passes touch each body
//! exactly once, and the result matches the dense KKT solution on trees.

use super::{BodyCtx, IslandSolution, JointCtx, SolveStats, SolverError};
use crate::math::{Mat12, Vec12};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

struct NodeWork {
    /// Parent body (island-local), usize::MAX at roots.
    parent: usize,
    /// Joint to the parent (original joint index), if any.
    parent_joint: Option<usize>,
    /// Anchors carried by this body (original joint indices).
    anchors: Vec<usize>,
    hhat: Mat12,
    fhat: Vec12,
}

/// Solve a tree/forest island. `r_override`, when given, replaces the
/// constraint-row right-hand side per joint (used by the loop solver);
/// otherwise it is `−C` under `feedback` and zero without.
pub fn solve_tree_with(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    feedback: bool,
    r_override: Option<&[DVector<f64>]>,
) -> Result<IslandSolution, SolverError> {
    let n = bodies.len();
    let mut stats = SolveStats::default();

    // adjacency over body-body joints
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (other, joint)
    let mut anchors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, j) in joints.iter().enumerate() {
        match j.body_b {
            Some(b) => {
                adjacency[j.body_a].push((b, k));
                adjacency[b].push((j.body_a, k));
            }
            None => anchors[j.body_a].push(k),
        }
    }

    // BFS forest; prefer anchored bodies as roots
    let mut nodes: Vec<NodeWork> = (0..n)
        .map(|b| NodeWork {
            parent: usize::MAX,
            parent_joint: None,
            anchors: anchors[b].clone(),
            hhat: bodies[b].model.dense_hessian(&bodies[b].rotation),
            fhat: bodies[b].f_a,
        })
        .collect();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut roots: Vec<usize> = (0..n).filter(|&b| !anchors[b].is_empty()).collect();
    roots.extend(0..n);
    for root in roots {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(b) = queue.pop_front() {
            order.push(b);
            for &(other, k) in &adjacency[b] {
                if nodes[b].parent_joint == Some(k) {
                    continue;
                }
                if seen[other] {
                    return Err(SolverError::NotATree);
                }
                seen[other] = true;
                nodes[other].parent = b;
                nodes[other].parent_joint = Some(k);
                queue.push_back(other);
            }
        }
    }

    let rhs_for = |k: usize| -> DVector<f64> {
        match r_override {
            Some(r) => r[k].clone(),
            None if feedback => -&joints[k].residual,
            None => DVector::zeros(joints[k].rank),
        }
    };

    // per-body elimination workspace kept for the downward pass
    struct Eliminated {
        /// Ĥ⁻¹ C_jᵀ
        y: DMatrix<f64>,
        chol_w: Option<Cholesky<f64, Dyn>>,
        /// stacked constraint rows on this body
        c_j: DMatrix<f64>,
        /// stacked constraint rows on the parent (zero rows for anchors)
        c_p: DMatrix<f64>,
        /// stacked constraint right-hand side (before the parent correction)
        r: DVector<f64>,
        /// Ĥ⁻¹ f̂
        u: DVector<f64>,
        /// row partition: (joint index, rows)
        pieces: Vec<(usize, usize)>,
    }
    let mut work: Vec<Option<Eliminated>> = (0..n).map(|_| None).collect();

    // leaf-to-root: reverse BFS order
    for &b in order.iter().rev() {
        stats.upward_visits += 1;
        let node = &nodes[b];
        let mut pieces: Vec<(usize, usize)> = Vec::new();
        let mut rows = 0;
        if let Some(k) = node.parent_joint {
            pieces.push((k, joints[k].rank));
            rows += joints[k].rank;
        }
        for &k in &node.anchors {
            pieces.push((k, joints[k].rank));
            rows += joints[k].rank;
        }
        let hhat_dyn = DMatrix::from_fn(12, 12, |i, j| nodes[b].hhat[(i, j)]);
        let chol_h = hhat_dyn.cholesky().ok_or(SolverError::SingularD { body: b })?;
        stats.block_factorizations += 1;
        let fhat_dyn = DVector::from_row_slice(nodes[b].fhat.as_slice());
        let u = chol_h.solve(&fhat_dyn);

        let mut c_j = DMatrix::zeros(rows, 12);
        let mut c_p = DMatrix::zeros(rows, 12);
        let mut r = DVector::zeros(rows);
        let mut at = 0;
        for &(k, rk) in &pieces {
            let grad_j = joints[k].grad_for(b).expect("joint touches this body");
            c_j.view_mut((at, 0), (rk, 12)).copy_from(grad_j);
            if Some(k) == node.parent_joint {
                let grad_p = joints[k]
                    .grad_for(node.parent)
                    .expect("parent joint touches the parent");
                c_p.view_mut((at, 0), (rk, 12)).copy_from(grad_p);
            }
            r.rows_mut(at, rk).copy_from(&rhs_for(k));
            at += rk;
        }

        let (y, chol_w) = if rows > 0 {
            let y = chol_h.solve(&c_j.transpose());
            let w = &c_j * &y;
            stats.block_multiplies += 2;
            let chol_w =
                super::chain::factor_spd(&w).ok_or(SolverError::SingularD { body: b })?;
            stats.block_factorizations += 1;
            // condensed contribution onto the parent
            if node.parent != usize::MAX {
                let g = &c_j * &u - &r;
                let winv_cp = chol_w.solve(&c_p);
                let winv_g = chol_w.solve(&g);
                let dh = c_p.transpose() * winv_cp;
                let df = -(c_p.transpose() * winv_g);
                stats.block_multiplies += 2;
                let p = node.parent;
                for i in 0..12 {
                    for jj in 0..12 {
                        nodes[p].hhat[(i, jj)] += dh[(i, jj)];
                    }
                }
                nodes[p].fhat += Vec12::from_row_slice(df.as_slice());
            }
            (y, Some(chol_w))
        } else {
            (DMatrix::zeros(12, 0), None)
        };
        work[b] = Some(Eliminated {
            y,
            chol_w,
            c_j,
            c_p,
            r,
            u,
            pieces,
        });
    }

    // root-to-leaf: BFS order, each body solves its local KKT
    let mut dq: Vec<Vec12> = vec![Vec12::zeros(); n];
    let mut lambda: Vec<DVector<f64>> = joints.iter().map(|j| DVector::zeros(j.rank)).collect();
    for &b in &order {
        stats.downward_visits += 1;
        let node_parent = nodes[b].parent;
        let w = work[b].as_ref().expect("eliminated in the upward pass");
        // refresh Ĥ⁻¹ f̂: f̂ may have received child condensations after u was
        // computed only for bodies eliminated before their children — BFS
        // reverse order guarantees children first, so u is final here.
        let delta = if let Some(chol_w) = &w.chol_w {
            let mut r_full = w.r.clone();
            if node_parent != usize::MAX {
                let parent_dq = DVector::from_row_slice(dq[node_parent].as_slice());
                r_full -= &w.c_p * parent_dq;
            }
            let g = &w.c_j * &w.u - r_full;
            let lam = chol_w.solve(&g);
            let dq_b = &w.u - &w.y * &lam;
            (dq_b, Some(lam))
        } else {
            (w.u.clone(), None)
        };
        dq[b] = Vec12::from_row_slice(delta.0.as_slice());
        if let Some(lam) = delta.1 {
            let mut at = 0;
            for &(k, rk) in &w.pieces {
                lambda[k] = lam.rows(at, rk).into_owned();
                at += rk;
            }
        }
    }

    Ok(IslandSolution { dq, lambda, stats })
}

/// Tree-topology solve with the standard constraint right-hand side.
pub fn solve_tree_aba(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    feedback: bool,
) -> Result<IslandSolution, SolverError> {
    solve_tree_with(bodies, joints, feedback, None)
}
