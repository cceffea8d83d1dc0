//! Seeded random graph generators for tests and benchmarks.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::NodeId;

/// `m` distinct undirected edges (no self-loops) over `n` nodes.
pub fn gnm_undirected(n: usize, m: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    assert!(n >= 2, "need at least two nodes");
    let max = n * (n - 1) / 2;
    assert!(m <= max, "requested {m} edges, only {max} possible");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.gen_range(0..n as NodeId);
        let v = rng.gen_range(0..n as NodeId);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key) {
            edges.push(key);
        }
    }
    edges
}

/// `m` distinct directed edges (no self-loops) over `n` nodes.
pub fn gnm_directed(n: usize, m: usize, seed: u64) -> Vec<(NodeId, NodeId)> {
    assert!(n >= 2, "need at least two nodes");
    let max = n * (n - 1);
    assert!(m <= max, "requested {m} edges, only {max} possible");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.gen_range(0..n as NodeId);
        let v = rng.gen_range(0..n as NodeId);
        if u == v {
            continue;
        }
        if seen.insert((u, v)) {
            edges.push((u, v));
        }
    }
    edges
}
