//! Shared fixtures for the engine benchmarks.

use dynppr::{gen, DynamicGraph, NodeId};

/// A seeded undirected graph split into an initial segment and an insert
/// tail, mirroring the experiment protocol.
pub struct StreamFixture {
    pub graph: DynamicGraph,
    pub tail: Vec<(NodeId, NodeId)>,
}

pub fn undirected_stream(n: usize, m: usize, seed: u64) -> StreamFixture {
    let edges = gen::gnm_undirected(n, m, seed);
    let cut = m / 2;
    let graph = DynamicGraph::from_edges(n, &edges[..cut], false).expect("simple edge list");
    StreamFixture {
        graph,
        tail: edges[cut..].to_vec(),
    }
}
