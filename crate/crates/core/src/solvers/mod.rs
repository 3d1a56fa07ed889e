//! Dual-space KKT machinery.
//!
//! Eliminating the primal increments from the global KKT system leaves the
//! dual system
//!
//! ```text
//! (∇C̃ H̃⁻¹ ∇C̃ᵀ) δλ̃ = ∇C̃ H̃⁻¹ f̃_A + C̃(qₙ)
//! ```
//!
//! whose blocks are assembled per body through the pre-factorized single-body
//! solve (never forming `H̃⁻¹`). An off-diagonal block `(k, k′)` is nonzero iff
//! joints `k` and `k′` share a body. Articulated systems are classified by
//! joint topology and dispatched to a specialized solver:
//!
//! - chain → block-Thomas ([`chain`])
//! - tree → leaf-to-root condensation with root-to-leaf local KKT solves
//!   ([`tree`])
//! - loop → Schur complement over the loop breakers ([`looped`])
//! - general graph → bidirectional block Gauss-Seidel over a chain cover
//!   ([`graph`]), with a direct factorization of the dual matrix as fallback.

pub mod chain;
pub mod graph;
pub mod looped;
pub mod tree;

use crate::body::BodyModel;
use crate::math::{Mat3, Vec12};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    EmptyScene,
    /// A diagonal block of the dual system failed to factorize.
    SingularDiagonalBlock { joint: usize },
    /// A per-joint condensation block failed to factorize.
    SingularD { body: usize },
    NotATree,
    SingularSchur,
    /// Gauss-Seidel did not reach the tolerance; carries the best iterate.
    NotConverged {
        lambda: Vec<DVector<f64>>,
        residual: f64,
    },
    SingularKkt,
    TopologyMismatch { expected: &'static str },
}

impl std::fmt::Display for SolverError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverError::EmptyScene => write!(f, "no bodies in scene"),
            SolverError::SingularDiagonalBlock { joint } => {
                write!(f, "singular dual diagonal block at joint {joint}")
            }
            SolverError::SingularD { body } => {
                write!(f, "singular condensation block at body {body}")
            }
            SolverError::NotATree => write!(f, "joint topology is not a tree"),
            SolverError::SingularSchur => write!(f, "singular loop Schur complement"),
            SolverError::NotConverged { residual, .. } => {
                write!(f, "Gauss-Seidel stalled at residual {residual:.3e}")
            }
            SolverError::SingularKkt => write!(f, "singular KKT system"),
            SolverError::TopologyMismatch { expected } => {
                write!(f, "solver requires {expected} topology")
            }
        }
    }
}

impl std::error::Error for SolverError {}

/// Per-body solver inputs for one island.
pub struct BodyCtx<'a> {
    pub model: &'a BodyModel,
    /// Polar rotation of the current `A`.
    pub rotation: Mat3,
    /// Assembled right-hand side (inertia residual + external + elastic).
    pub f_a: Vec12,
}

impl BodyCtx<'_> {
    /// `H_A⁻¹ x` through the prefactored solve.
    pub fn solve(&self, x: &Vec12) -> Vec12 {
        self.model.solve_rotated(&self.rotation, x)
    }
}

/// Per-joint solver inputs: gradients at the current state, island-local
/// body indices.
pub struct JointCtx {
    pub body_a: usize,
    pub body_b: Option<usize>,
    pub rank: usize,
    pub grad_a: DMatrix<f64>,
    pub grad_b: Option<DMatrix<f64>>,
    pub residual: DVector<f64>,
}

impl JointCtx {
    /// Gradient w.r.t. an incident body, by island-local index.
    pub fn grad_for(&self, body: usize) -> Option<&DMatrix<f64>> {
        if self.body_a == body {
            Some(&self.grad_a)
        } else if self.body_b == Some(body) {
            self.grad_b.as_ref()
        } else {
            None
        }
    }
}

/// Joint topology of one island.
#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// Joint adjacency graph is a simple path (stored in path order).
    Chain { order: Vec<usize> },
    /// Body graph is a tree.
    Tree,
    /// Removing the breaker bodies leaves chains/trees.
    Loop { breakers: Vec<usize> },
    Graph,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::Chain { .. } => write!(f, "Chain"),
            Topology::Tree => write!(f, "Tree"),
            Topology::Loop { breakers } => write!(f, "Loop(breakers={})", breakers.len()),
            Topology::Graph => write!(f, "Graph"),
        }
    }
}

/// Operation counters, for the linear-complexity checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub block_factorizations: usize,
    pub block_multiplies: usize,
    pub upward_visits: usize,
    pub downward_visits: usize,
    pub sweeps: usize,
}

/// Solution of one island's KKT step.
pub struct IslandSolution {
    pub dq: Vec<Vec12>,
    pub lambda: Vec<DVector<f64>>,
    pub stats: SolveStats,
}

/// Joint adjacency: two joints are adjacent iff they share a body.
fn joint_adjacency(joints: &[JointCtx]) -> Vec<Vec<usize>> {
    let mut by_body: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (k, j) in joints.iter().enumerate() {
        by_body.entry(j.body_a).or_default().push(k);
        if let Some(b) = j.body_b {
            by_body.entry(b).or_default().push(k);
        }
    }
    let mut adj = vec![Vec::new(); joints.len()];
    for list in by_body.values() {
        for (i, &k) in list.iter().enumerate() {
            for &kp in &list[i + 1..] {
                if !adj[k].contains(&kp) {
                    adj[k].push(kp);
                    adj[kp].push(k);
                }
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// Body-graph edges (body-body joints only), deduplicated pairs plus a
/// parallel-edge count.
fn body_edges(joints: &[JointCtx]) -> (Vec<(usize, usize)>, usize) {
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for j in joints {
        if let Some(b) = j.body_b {
            let key = (j.body_a.min(b), j.body_a.max(b));
            *seen.entry(key).or_insert(0) += 1;
        }
    }
    let parallel = seen.values().map(|&c| c - 1).sum();
    (seen.keys().copied().collect(), parallel)
}

fn is_forest(n_bodies: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n_bodies).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    true
}

/// Path order of the joint graph if it is a simple path.
fn path_order(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    if n == 0 {
        return Some(Vec::new());
    }
    if n == 1 {
        return Some(vec![0]);
    }
    let ends: Vec<usize> = (0..n).filter(|&k| adj[k].len() == 1).collect();
    if ends.len() != 2 || adj.iter().any(|a| a.len() > 2) {
        return None;
    }
    let mut order = Vec::with_capacity(n);
    let mut prev = usize::MAX;
    let mut cur = ends[0];
    loop {
        order.push(cur);
        let next = adj[cur].iter().copied().find(|&k| k != prev);
        match next {
            Some(k) => {
                prev = cur;
                cur = k;
            }
            None => break,
        }
    }
    if order.len() == n {
        Some(order)
    } else {
        None
    }
}

/// Classify the joint topology of one island. Deterministic given input
/// order; breakers are selected by a greedy feedback-vertex heuristic capped
/// at `max_breakers`.
pub fn classify_topology(
    n_bodies: usize,
    joints: &[JointCtx],
    max_breakers: usize,
) -> Result<Topology, SolverError> {
    if n_bodies == 0 {
        return Err(SolverError::EmptyScene);
    }
    let adj = joint_adjacency(joints);
    if let Some(order) = path_order(&adj) {
        return Ok(Topology::Chain { order });
    }
    let (edges, parallel) = body_edges(joints);
    if parallel == 0 && is_forest(n_bodies, &edges) {
        return Ok(Topology::Tree);
    }
    // greedy feedback vertices: repeatedly drop the body whose removal
    // reduces the cycle count most
    let cycles = |removed: &[bool]| -> usize {
        let mut extra = 0;
        let mut simple = Vec::new();
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for j in joints {
            if let Some(b) = j.body_b {
                if removed[j.body_a] || removed[b] {
                    continue;
                }
                let key = (j.body_a.min(b), j.body_a.max(b));
                *seen.entry(key).or_insert(0) += 1;
            }
        }
        for (&key, &count) in &seen {
            simple.push(key);
            extra += count - 1;
        }
        // independent cycles of the simple graph: E − V + components
        let alive: Vec<usize> = (0..n_bodies).filter(|&b| !removed[b]).collect();
        let mut parent: BTreeMap<usize, usize> = alive.iter().map(|&b| (b, b)).collect();
        fn find(parent: &mut BTreeMap<usize, usize>, mut x: usize) -> usize {
            while parent[&x] != x {
                let up = parent[&parent[&x]];
                parent.insert(x, up);
                x = up;
            }
            x
        }
        let mut merges = 0;
        for &(a, b) in &simple {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent.insert(ra, rb);
                merges += 1;
            }
        }
        extra + simple.len() - merges
    };
    let mut removed = vec![false; n_bodies];
    let mut breakers = Vec::new();
    while cycles(&removed) > 0 && breakers.len() < max_breakers {
        let current = cycles(&removed);
        let mut best: Option<(usize, usize)> = None;
        for b in 0..n_bodies {
            if removed[b] {
                continue;
            }
            removed[b] = true;
            let after = cycles(&removed);
            removed[b] = false;
            let gain = current - after;
            if best.map_or(true, |(g, _)| gain > g) {
                best = Some((gain, b));
            }
        }
        let (gain, body) = best.expect("cyclic graph has at least one body");
        if gain == 0 {
            break;
        }
        removed[body] = true;
        breakers.push(body);
    }
    if cycles(&removed) == 0 {
        Ok(Topology::Loop { breakers })
    } else {
        Ok(Topology::Graph)
    }
}

/// Block-sparse dual system `∇C̃ H̃⁻¹ ∇C̃ᵀ δλ̃ = ∇C̃ H̃⁻¹ f̃_A (+ C̃)`.
pub struct DualSystem {
    pub ranks: Vec<usize>,
    /// Upper blocks, keyed `(k, k′)` with `k ≤ k′`.
    pub blocks: BTreeMap<(usize, usize), DMatrix<f64>>,
    pub rhs: Vec<DVector<f64>>,
}

impl DualSystem {
    pub fn n_joints(&self) -> usize {
        self.ranks.len()
    }

    /// Block `(k, k′)` in either orientation (transposing stored uppers).
    pub fn block(&self, k: usize, kp: usize) -> Option<DMatrix<f64>> {
        if k <= kp {
            self.blocks.get(&(k, kp)).cloned()
        } else {
            self.blocks.get(&(kp, k)).map(|b| b.transpose())
        }
    }

    /// Joints coupled to `k` (excluding `k`).
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        self.blocks
            .keys()
            .filter_map(|&(a, b)| {
                if a == k && b != k {
                    Some(b)
                } else if b == k && a != k {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Residual blocks `rhs − S λ`.
    pub fn residual(&self, lambda: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut r: Vec<DVector<f64>> = self.rhs.clone();
        for (&(k, kp), block) in &self.blocks {
            r[k] -= block * &lambda[kp];
            if k != kp {
                r[kp] -= block.transpose() * &lambda[k];
            }
        }
        r
    }

    pub fn residual_inf_norm(&self, lambda: &[DVector<f64>]) -> f64 {
        self.residual(lambda)
            .iter()
            .map(|r| r.amax())
            .fold(0.0, f64::max)
    }

    /// Dense assembly plus Cholesky: the direct fallback for moderate
    /// systems.
    pub fn solve_dense(&self) -> Result<Vec<DVector<f64>>, SolverError> {
        let offsets = self.offsets();
        let dim = offsets.last().copied().unwrap_or(0) + self.ranks.last().copied().unwrap_or(0);
        let mut s = DMatrix::zeros(dim, dim);
        let mut b = DVector::zeros(dim);
        for (&(k, kp), block) in &self.blocks {
            s.view_mut((offsets[k], offsets[kp]), block.shape())
                .copy_from(block);
            if k != kp {
                s.view_mut((offsets[kp], offsets[k]), (block.ncols(), block.nrows()))
                    .copy_from(&block.transpose());
            }
        }
        for (k, rhs) in self.rhs.iter().enumerate() {
            b.rows_mut(offsets[k], rhs.len()).copy_from(rhs);
        }
        let chol = chain::factor_spd(&s).ok_or(SolverError::SingularKkt)?;
        let sol = chol.solve(&b);
        Ok(self
            .ranks
            .iter()
            .enumerate()
            .map(|(k, &c)| sol.rows(offsets[k], c).into_owned())
            .collect())
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.ranks.len());
        let mut acc = 0;
        for &c in &self.ranks {
            offsets.push(acc);
            acc += c;
        }
        offsets
    }
}

/// Assemble the dual system through per-body back-substitutions of each
/// gradient row. With `feedback` the constraint residual is added to the
/// right-hand side so the linearized constraints are driven to `−C̃(qₙ)`.
pub fn assemble_dual(bodies: &[BodyCtx], joints: &[JointCtx], feedback: bool) -> DualSystem {
    let r: Vec<DVector<f64>> = joints
        .iter()
        .map(|j| {
            if feedback {
                -&j.residual
            } else {
                DVector::zeros(j.rank)
            }
        })
        .collect();
    assemble_dual_with(bodies, joints, &r)
}

/// Dual assembly with an explicit constraint right-hand side `r` (the second
/// KKT row): the dual right-hand side becomes `∇C̃ H̃⁻¹ f̃_A − r`.
pub fn assemble_dual_with(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    r: &[DVector<f64>],
) -> DualSystem {
    let ranks: Vec<usize> = joints.iter().map(|j| j.rank).collect();
    let mut blocks: BTreeMap<(usize, usize), DMatrix<f64>> = BTreeMap::new();
    let mut rhs: Vec<DVector<f64>> = r.iter().map(|rk| -rk).collect();

    // joints incident to each body
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); bodies.len()];
    for (k, j) in joints.iter().enumerate() {
        incident[j.body_a].push(k);
        if let Some(b) = j.body_b {
            incident[b].push(k);
        }
    }

    for (b, body) in bodies.iter().enumerate() {
        if incident[b].is_empty() {
            continue;
        }
        // Y_k = H_b⁻¹ ∇C_kᵀ, one back-substitution per gradient row
        let solved: Vec<(usize, DMatrix<f64>, &DMatrix<f64>)> = incident[b]
            .iter()
            .map(|&k| {
                let grad = joints[k].grad_for(b).expect("incidence list is consistent");
                let mut y = DMatrix::zeros(12, grad.nrows());
                for (c, row) in grad.row_iter().enumerate() {
                    let col = body.solve(&Vec12::from_row_slice(row.transpose().as_slice()));
                    y.set_column(c, &DVector::from_row_slice(col.as_slice()));
                }
                (k, y, grad)
            })
            .collect();
        let hf = body.solve(&body.f_a);
        for (k, _y_k, grad_k) in &solved {
            let gk_hf = *grad_k * DVector::from_row_slice(hf.as_slice());
            rhs[*k] += gk_hf;
            for (kp, y_kp, _) in &solved {
                if k > kp {
                    continue;
                }
                let contrib = *grad_k * y_kp;
                blocks
                    .entry((*k, *kp))
                    .and_modify(|blk| *blk += &contrib)
                    .or_insert(contrib);
            }
        }
    }

    // numerical symmetry of the diagonal blocks
    for (&(k, kp), block) in blocks.iter_mut() {
        if k == kp {
            let sym = (block.clone() + block.transpose()) / 2.0;
            debug_assert!(
                (block.clone() - &sym).norm() <= 1e-9 * sym.norm().max(1e-30),
                "dual diagonal block {k} asymmetric"
            );
            *block = sym;
        }
    }
    DualSystem { ranks, blocks, rhs }
}

/// Primal recovery: `δq_j = H_j⁻¹ (f_j − Σ_k ∇C_{j,k}ᵀ δλ_k)`.
pub fn recover_primal(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    lambda: &[DVector<f64>],
) -> Vec<Vec12> {
    recover_primal_with(bodies, joints, lambda)
}

pub(crate) fn recover_primal_with(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    lambda: &[DVector<f64>],
) -> Vec<Vec12> {
    bodies
        .iter()
        .enumerate()
        .map(|(b, body)| {
            let mut rhs = body.f_a;
            for (k, joint) in joints.iter().enumerate() {
                if let Some(grad) = joint.grad_for(b) {
                    let contrib = grad.transpose() * &lambda[k];
                    rhs -= Vec12::from_column_slice(contrib.as_slice());
                }
            }
            body.solve(&rhs)
        })
        .collect()
}

/// Solver selection for one island.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Topology-directed dispatch.
    Auto,
    /// Direct factorization of the assembled dual matrix.
    DenseDual,
    Chain,
    Tree,
    Loop,
    GaussSeidel,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub choice: SolverChoice,
    /// Add `C̃(qₙ)` to the dual right-hand side (drift control).
    pub feedback: bool,
    pub gs_tol: f64,
    pub gs_max_sweeps: usize,
    pub max_breakers: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            choice: SolverChoice::Auto,
            feedback: true,
            gs_tol: 1e-6,
            gs_max_sweeps: 200,
            max_breakers: 4,
        }
    }
}

/// Solve one island's KKT step with the chosen (or topology-dispatched)
/// solver.
pub fn solve_island(
    bodies: &[BodyCtx],
    joints: &[JointCtx],
    opts: &SolveOptions,
) -> Result<IslandSolution, SolverError> {
    if bodies.is_empty() {
        return Err(SolverError::EmptyScene);
    }
    if joints.is_empty() {
        let dq = bodies.iter().map(|b| b.solve(&b.f_a)).collect();
        return Ok(IslandSolution {
            dq,
            lambda: Vec::new(),
            stats: SolveStats::default(),
        });
    }
    let topology = classify_topology(bodies.len(), joints, opts.max_breakers)?;
    let choice = match opts.choice {
        SolverChoice::Auto => match &topology {
            Topology::Chain { .. } => SolverChoice::Chain,
            Topology::Tree => SolverChoice::Tree,
            Topology::Loop { .. } => SolverChoice::Loop,
            Topology::Graph => SolverChoice::GaussSeidel,
        },
        c => c,
    };
    match choice {
        SolverChoice::Chain => {
            let Topology::Chain { order } = &topology else {
                return Err(SolverError::TopologyMismatch { expected: "chain" });
            };
            let dual = assemble_dual(bodies, joints, opts.feedback);
            let (lambda, stats) = chain::solve_chain(&dual, order)?;
            let dq = recover_primal(bodies, joints, &lambda);
            Ok(IslandSolution { dq, lambda, stats })
        }
        SolverChoice::Tree => tree::solve_tree_aba(bodies, joints, opts.feedback),
        SolverChoice::Loop => {
            let Topology::Loop { breakers } = &topology else {
                return Err(SolverError::TopologyMismatch { expected: "loop" });
            };
            looped::solve_loop(bodies, joints, breakers, opts.feedback)
        }
        SolverChoice::GaussSeidel => {
            let dual = assemble_dual(bodies, joints, opts.feedback);
            let adj = joint_adjacency(joints);
            let chains = graph::chain_cover(&adj);
            match graph::solve_graph_gs(&dual, &chains, opts.gs_tol, opts.gs_max_sweeps) {
                Ok((lambda, stats)) => {
                    let dq = recover_primal(bodies, joints, &lambda);
                    Ok(IslandSolution { dq, lambda, stats })
                }
                Err(SolverError::NotConverged { .. }) => {
                    // direct fallback keeps the step exact when relaxation stalls
                    let lambda = dual.solve_dense()?;
                    let dq = recover_primal(bodies, joints, &lambda);
                    Ok(IslandSolution {
                        dq,
                        lambda,
                        stats: SolveStats::default(),
                    })
                }
                Err(e) => Err(e),
            }
        }
        SolverChoice::DenseDual => {
            let dual = assemble_dual(bodies, joints, opts.feedback);
            let lambda = dual.solve_dense()?;
            let dq = recover_primal(bodies, joints, &lambda);
            Ok(IslandSolution {
                dq,
                lambda,
                stats: SolveStats::default(),
            })
        }
        SolverChoice::Auto => unreachable!("auto resolved above"),
    }
}

/// Expose the chain cover (for diagnostics and tests).
pub fn chain_cover_of(joints: &[JointCtx]) -> Vec<Vec<usize>> {
    graph::chain_cover(&joint_adjacency(joints))
}
