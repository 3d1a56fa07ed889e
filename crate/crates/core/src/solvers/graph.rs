//! Bidirectional block Gauss-Seidel for general joint graphs.
//!
//! The joint graph is covered by chains (greedy longest-path extraction);
//! each sweep relaxes every chain exactly with a block-Thomas solve of its
//! tridiagonal sub-blocks, folding all remaining couplings into the
//! right-hand side. Sweeps alternate forward and backward over the chain
//! list until the dual residual drops below tolerance.

use super::{chain::solve_block_tridiagonal, DualSystem, SolveStats, SolverError};
use nalgebra::{DMatrix, DVector};

/// Greedy chain cover: repeatedly extract a maximal path of unvisited joints
/// by double-BFS from a maximum-degree unvisited node. Deterministic given
/// input order; every joint lands in exactly one chain.
pub fn chain_cover(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    let mut visited = vec![false; n];
    let mut chains = Vec::new();
    let bfs_far = |start: usize, visited: &[bool]| -> (usize, Vec<usize>) {
        // returns the farthest node and the path to it (within unvisited)
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut last = start;
        while let Some(u) = queue.pop_front() {
            last = u;
            for &v in &adjacency[u] {
                if !visited[v] && !seen[v] {
                    seen[v] = true;
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![last];
        let mut cur = last;
        while prev[cur] != usize::MAX {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        (last, path)
    };
    loop {
        let start = (0..n)
            .filter(|&k| !visited[k])
            .max_by_key(|&k| {
                (
                    adjacency[k].iter().filter(|&&v| !visited[v]).count(),
                    usize::MAX - k, // tie: lowest index
                )
            });
        let Some(start) = start else { break };
        let (far, _) = bfs_far(start, &visited);
        let (_, path) = bfs_far(far, &visited);
        for &k in &path {
            visited[k] = true;
        }
        chains.push(path);
    }
    chains
}

/// Relax the dual system chain by chain until the residual ∞-norm reaches
/// `tol` or `max_sweeps` directional passes elapse. Returns the iterate and
/// stats on success; `NotConverged` carries the best iterate found.
pub fn solve_graph_gs(
    dual: &DualSystem,
    chains: &[Vec<usize>],
    tol: f64,
    max_sweeps: usize,
) -> Result<(Vec<DVector<f64>>, SolveStats), SolverError> {
    let n = dual.n_joints();
    let mut lambda: Vec<DVector<f64>> = dual.ranks.iter().map(|&c| DVector::zeros(c)).collect();
    let mut stats = SolveStats::default();
    let neighbors: Vec<Vec<usize>> = (0..n).map(|k| dual.neighbors(k)).collect();

    // per-chain tridiagonal coupling set: predecessor/successor inside the
    // chain (everything else is folded into the right-hand side)
    let mut in_chain_links: Vec<(Option<usize>, Option<usize>)> = vec![(None, None); n];
    for chain in chains {
        for (pos, &k) in chain.iter().enumerate() {
            let prev = if pos > 0 { Some(chain[pos - 1]) } else { None };
            let next = chain.get(pos + 1).copied();
            in_chain_links[k] = (prev, next);
        }
    }

    let mut best: Option<(f64, Vec<DVector<f64>>)> = None;
    for sweep in 0..max_sweeps {
        let forward = sweep % 2 == 0;
        let indices: Vec<usize> = if forward {
            (0..chains.len()).collect()
        } else {
            (0..chains.len()).rev().collect()
        };
        for ci in indices {
            let chain = &chains[ci];
            let m = chain.len();
            let mut diag = Vec::with_capacity(m);
            let mut upper = Vec::with_capacity(m.saturating_sub(1));
            let mut rhs = Vec::with_capacity(m);
            for (pos, &k) in chain.iter().enumerate() {
                diag.push(
                    dual.block(k, k)
                        .unwrap_or_else(|| DMatrix::zeros(dual.ranks[k], dual.ranks[k])),
                );
                let (prev, next) = in_chain_links[k];
                let mut b = dual.rhs[k].clone();
                for &kp in &neighbors[k] {
                    if Some(kp) == prev || Some(kp) == next {
                        continue;
                    }
                    if let Some(blk) = dual.block(k, kp) {
                        b -= blk * &lambda[kp];
                        stats.block_multiplies += 1;
                    }
                }
                rhs.push(b);
                if pos + 1 < m {
                    upper.push(dual.block(k, chain[pos + 1]));
                }
            }
            let (sol, st) = solve_block_tridiagonal(&diag, &upper, &rhs, chain)?;
            stats.block_factorizations += st.block_factorizations;
            stats.block_multiplies += st.block_multiplies;
            for (pos, &k) in chain.iter().enumerate() {
                lambda[k] = sol[pos].clone();
            }
        }
        stats.sweeps += 1;
        let res = dual.residual_inf_norm(&lambda);
        if best.as_ref().map_or(true, |(b, _)| res < *b) {
            best = Some((res, lambda.clone()));
        }
        if res <= tol {
            return Ok((lambda, stats));
        }
    }
    let (residual, lambda) = best.expect("at least one sweep ran");
    Err(SolverError::NotConverged { lambda, residual })
}
