//! Ground-truth personalized PageRank for tests and benchmark error
//! measurement.
//!
//! `π(s, t)` is the probability that a random walk from `s`, stopping with
//! probability `alpha` at each step, ends at `t`. A node with no out-edges
//! sends the walk back to the source `s` on continuation; every engine in
//! this crate and the oracle share that dangling semantics.
//!
//! Because the dangling rule targets the *source*, the transition matrix is
//! source-dependent as soon as dangling nodes exist. From-source vectors are
//! unaffected (each run fixes one source). To-target columns fall back to one
//! run per source in that case, except on undirected graphs, where the only
//! dangling nodes are isolated and a single solve plus a diagonal fixup is
//! exact.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{DynamicGraph, NodeId};

/// Largest node count accepted by the dense routines.
pub const DENSE_NODE_LIMIT: usize = 2000;

const POWER_DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    FromSource,
    ToTarget,
}

/// A dense PPR vector: `values[t] = π(vertex, t)` for `FromSource`, or
/// `values[s] = π(s, vertex)` for `ToTarget`.
#[derive(Debug, Clone)]
pub struct PprVector {
    pub vertex: NodeId,
    pub direction: Direction,
    pub values: Vec<f64>,
}

impl PprVector {
    pub fn value(&self, node: NodeId) -> f64 {
        self.values.get(node as usize).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("power iteration did not converge within {iterations} iterations (l1 delta {delta:e})")]
    MaxIterExceeded {
        iterations: usize,
        delta: f64,
        last: PprVector,
    },
    #[error("graph has {nodes} nodes, dense routines accept at most {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("identity requires an undirected graph")]
    UndirectedRequired,
    #[error("reversibility identity violated: max gap {gap:e} exceeds tolerance {tol:e}")]
    ReversibilityViolated { gap: f64, tol: f64 },
    #[error("singular linear system")]
    SingularSystem,
}

fn check_dense_size(g: &DynamicGraph) -> Result<usize, OracleError> {
    let n = g.num_nodes();
    if n > DENSE_NODE_LIMIT {
        return Err(OracleError::TooLarge {
            nodes: n,
            limit: DENSE_NODE_LIMIT,
        });
    }
    Ok(n)
}

/// Fixed-point iteration of the PPR system from source `s`, with dangling
/// mass redirected to `s`. Stops when the l1 change drops below `tol`;
/// convergence is geometric at rate `1 - alpha`. `max_iter` defaults to
/// `⌈ln(tol)/ln(1-alpha)⌉ + 10`.
pub fn ppr_power(
    g: &DynamicGraph,
    s: NodeId,
    alpha: f64,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<PprVector, OracleError> {
    if tol <= 0.0 {
        return Err(OracleError::InvalidTolerance(tol));
    }
    let n = g.num_nodes();
    let max_iter = max_iter.unwrap_or_else(|| (tol.ln() / (1.0 - alpha).ln()).ceil() as usize + 10);
    let mut x = vec![0.0f64; n];
    x[s as usize] = 1.0;
    let mut next = vec![0.0f64; n];
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        let mut dangling = 0.0;
        for (u, &xu) in x.iter().enumerate() {
            if xu == 0.0 {
                continue;
            }
            let d = g.out_degree(u as NodeId);
            if d == 0 {
                dangling += xu;
            } else {
                let share = (1.0 - alpha) * xu / d as f64;
                for &v in g.out_neighbors(u as NodeId) {
                    next[v as usize] += share;
                }
            }
        }
        next[s as usize] += (1.0 - alpha) * dangling + alpha;
        let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            return Ok(PprVector {
                vertex: s,
                direction: Direction::FromSource,
                values: x,
            });
        }
    }
    let delta: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
    Err(OracleError::MaxIterExceeded {
        iterations: max_iter,
        delta,
        last: PprVector {
            vertex: s,
            direction: Direction::FromSource,
            values: x,
        },
    })
}

/// Row-stochastic transition matrix with the dangling row sent to `redirect`
/// (or left zero when `redirect` is `None`).
fn transition_matrix(g: &DynamicGraph, redirect: Option<NodeId>) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut m = DMatrix::zeros(n, n);
    for u in 0..n {
        let d = g.out_degree(u as NodeId);
        if d == 0 {
            if let Some(r) = redirect {
                m[(u, r as usize)] = 1.0;
            }
        } else {
            let w = 1.0 / d as f64;
            for &v in g.out_neighbors(u as NodeId) {
                m[(u, v as usize)] = w;
            }
        }
    }
    m
}

/// Solves the PPR linear system for source `s` by direct LU factorization.
/// Limited to [`DENSE_NODE_LIMIT`] nodes.
pub fn dense_solve(g: &DynamicGraph, s: NodeId, alpha: f64) -> Result<PprVector, OracleError> {
    let n = check_dense_size(g)?;
    let m = transition_matrix(g, Some(s));
    let system = DMatrix::identity(n, n) - m.transpose() * (1.0 - alpha);
    let mut rhs = DVector::zeros(n);
    rhs[s as usize] = alpha;
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or(OracleError::SingularSystem)?;
    Ok(PprVector {
        vertex: s,
        direction: Direction::FromSource,
        values: sol.iter().copied().collect(),
    })
}

fn has_dangling(g: &DynamicGraph) -> bool {
    (0..g.num_nodes()).any(|u| g.out_degree(u as NodeId) == 0)
}

/// The column `π(·, t)`.
///
/// Without dangling nodes this is a single linear solve. On undirected
/// graphs, dangling nodes are isolated and only their diagonal entries need
/// fixing up (`π(u, t) = 1` iff `u = t` for isolated `u`). On directed graphs
/// with dangling nodes the column is assembled from one from-source run per
/// node.
pub fn ppr_to_target(g: &DynamicGraph, t: NodeId, alpha: f64) -> Result<PprVector, OracleError> {
    let n = check_dense_size(g)?;
    let dangling = has_dangling(g);
    if dangling && g.is_directed() {
        let mut values = vec![0.0f64; n];
        for (s, value) in values.iter_mut().enumerate() {
            *value = ppr_power(g, s as NodeId, alpha, POWER_DEFAULT_TOL, None)?.value(t);
        }
        return Ok(PprVector {
            vertex: t,
            direction: Direction::ToTarget,
            values,
        });
    }
    let m = transition_matrix(g, None);
    let system = DMatrix::identity(n, n) - m * (1.0 - alpha);
    let mut rhs = DVector::zeros(n);
    rhs[t as usize] = 1.0;
    let sol = system
        .lu()
        .solve(&rhs)
        .ok_or(OracleError::SingularSystem)?;
    let mut values: Vec<f64> = sol.iter().map(|y| alpha * y).collect();
    if dangling {
        for (u, value) in values.iter_mut().enumerate() {
            if g.out_degree(u as NodeId) == 0 {
                *value = if u == t as usize { 1.0 } else { 0.0 };
            }
        }
    }
    Ok(PprVector {
        vertex: t,
        direction: Direction::ToTarget,
        values,
    })
}

/// Full PPR matrix `W[s][t] = π(s, t)`, routed through the cheapest exact
/// path available for the graph at hand.
pub fn ppr_matrix(g: &DynamicGraph, alpha: f64) -> Result<DMatrix<f64>, OracleError> {
    let n = check_dense_size(g)?;
    let dangling = has_dangling(g);
    if dangling && g.is_directed() {
        let mut w = DMatrix::zeros(n, n);
        for s in 0..n {
            let row = ppr_power(g, s as NodeId, alpha, POWER_DEFAULT_TOL, None)?;
            for t in 0..n {
                w[(s, t)] = row.values[t];
            }
        }
        return Ok(w);
    }
    let m = transition_matrix(g, None);
    let system = DMatrix::identity(n, n) - m * (1.0 - alpha);
    let mut w = system
        .lu()
        .try_inverse()
        .ok_or(OracleError::SingularSystem)?
        * alpha;
    if dangling {
        // isolated nodes: the walk never leaves the source
        for u in 0..n {
            if g.out_degree(u as NodeId) == 0 {
                for t in 0..n {
                    w[(u, t)] = if u == t { 1.0 } else { 0.0 };
                }
            }
        }
    }
    Ok(w)
}

/// The potential `Φ(x) = Σ_s d_in(s) · π(s, x)`. Its entries sum to the
/// number of directed edges, and on undirected graphs `Φ(x) = d(x)`.
pub fn phi_vector(g: &DynamicGraph, alpha: f64) -> Result<Vec<f64>, OracleError> {
    let n = g.num_nodes();
    let w = ppr_matrix(g, alpha)?;
    let mut phi = vec![0.0f64; n];
    for s in 0..n {
        let din = g.in_degree(s as NodeId) as f64;
        if din == 0.0 {
            continue;
        }
        for x in 0..n {
            phi[x] += din * w[(s, x)];
        }
    }
    Ok(phi)
}

/// Outcome of the undirected identity checks.
#[derive(Debug, Clone, Copy)]
pub struct ReversibilityReport {
    /// Max over pairs of `|π(s,t)·d(s) − π(t,s)·d(t)|`.
    pub max_reversibility_gap: f64,
    /// Max over targets of `Σ_x π(x,t)/d(t) − 1` (nonpositive when the mass
    /// bound holds exactly).
    pub max_mass_excess: f64,
}

/// Verifies the undirected reversibility identity `π(s,t)·d(s) = π(t,s)·d(t)`
/// for all pairs, and the column mass bound `Σ_x π(x,t)/d(t) ≤ 1` for every
/// target with nonzero degree. Fails if either is violated beyond `tol`.
pub fn check_reversibility(
    g: &DynamicGraph,
    alpha: f64,
    tol: f64,
) -> Result<ReversibilityReport, OracleError> {
    if g.is_directed() {
        return Err(OracleError::UndirectedRequired);
    }
    let n = check_dense_size(g)?;
    let w = ppr_matrix(g, alpha)?;
    let mut max_gap = 0.0f64;
    for s in 0..n {
        let ds = g.out_degree(s as NodeId) as f64;
        for t in (s + 1)..n {
            let dt = g.out_degree(t as NodeId) as f64;
            let gap = (w[(s, t)] * ds - w[(t, s)] * dt).abs();
            max_gap = max_gap.max(gap);
        }
    }
    let mut max_excess = f64::NEG_INFINITY;
    for t in 0..n {
        let dt = g.out_degree(t as NodeId) as f64;
        if dt == 0.0 {
            continue;
        }
        let col_sum: f64 = (0..n).map(|x| w[(x, t)]).sum();
        max_excess = max_excess.max(col_sum / dt - 1.0);
    }
    let report = ReversibilityReport {
        max_reversibility_gap: max_gap,
        max_mass_excess: max_excess,
    };
    if max_gap > tol || max_excess > tol {
        return Err(OracleError::ReversibilityViolated {
            gap: max_gap.max(max_excess),
            tol,
        });
    }
    Ok(report)
}
