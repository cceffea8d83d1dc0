//! Mutable graph representation shared by every engine.
//!
//! A [`DynamicGraph`] keeps both out- and in-adjacency as sorted vectors so
//! that membership tests are `O(log deg)` and neighbor iteration is
//! deterministic. Undirected graphs store both orientations of every edge;
//! the edge count `m` still counts each undirected edge once.

use thiserror::Error;

/// Dense node index. Ids are contiguous `0..n` after loading; ids mentioned
/// by later edge events extend the range.
pub type NodeId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) already present")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge ({0}, {1}) not present")]
    MissingEdge(NodeId, NodeId),
    #[error("self-loop ({0}, {0}) rejected")]
    SelfLoop(NodeId),
}

/// Simple directed or undirected graph under edge insertions and deletions.
#[derive(Debug, Clone)]
pub struct DynamicGraph {
    directed: bool,
    out_adj: Vec<Vec<NodeId>>,
    in_adj: Vec<Vec<NodeId>>,
    num_edges: usize,
}

impl DynamicGraph {
    pub fn new(directed: bool) -> Self {
        Self::with_nodes(0, directed)
    }

    pub fn with_nodes(n: usize, directed: bool) -> Self {
        Self {
            directed,
            out_adj: vec![Vec::new(); n],
            in_adj: vec![Vec::new(); n],
            num_edges: 0,
        }
    }

    /// Builds a graph from a simple edge list. The list must already be
    /// deduplicated (for undirected graphs: per unordered pair) and free of
    /// self-loops, as [`load_snap`](crate::snap::load_snap) guarantees.
    pub fn from_edges(
        n: usize,
        edges: &[(NodeId, NodeId)],
        directed: bool,
    ) -> Result<Self, GraphError> {
        let mut g = Self::with_nodes(n, directed);
        for &(u, v) in edges {
            g.insert_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn num_nodes(&self) -> usize {
        self.out_adj.len()
    }

    /// Current number of edges; undirected edges are counted once.
    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Grows the id space so that `u` is a valid node.
    pub fn ensure_node(&mut self, u: NodeId) {
        let need = u as usize + 1;
        if need > self.out_adj.len() {
            self.out_adj.resize(need, Vec::new());
            self.in_adj.resize(need, Vec::new());
        }
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        match self.out_adj.get(u as usize) {
            Some(adj) => adj.binary_search(&v).is_ok(),
            None => false,
        }
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_adj.get(u as usize).map_or(0, Vec::len)
    }

    pub fn in_degree(&self, u: NodeId) -> usize {
        self.in_adj.get(u as usize).map_or(0, Vec::len)
    }

    /// `(d_out, d_in)` of `u`.
    pub fn degrees(&self, u: NodeId) -> (usize, usize) {
        (self.out_degree(u), self.in_degree(u))
    }

    pub fn out_neighbors(&self, u: NodeId) -> &[NodeId] {
        self.out_adj.get(u as usize).map_or(&[], Vec::as_slice)
    }

    pub fn in_neighbors(&self, u: NodeId) -> &[NodeId] {
        self.in_adj.get(u as usize).map_or(&[], Vec::as_slice)
    }

    /// Inserts an edge. For undirected graphs both orientations are stored.
    /// New node ids extend the id space.
    pub fn insert_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if self.has_edge(u, v) {
            return Err(GraphError::DuplicateEdge(u, v));
        }
        self.ensure_node(u.max(v));
        Self::insert_sorted(&mut self.out_adj[u as usize], v);
        Self::insert_sorted(&mut self.in_adj[v as usize], u);
        if !self.directed {
            Self::insert_sorted(&mut self.out_adj[v as usize], u);
            Self::insert_sorted(&mut self.in_adj[u as usize], v);
        }
        self.num_edges += 1;
        Ok(())
    }

    /// Removes an edge. Nodes are never removed, even when their degree
    /// drops to zero.
    pub fn delete_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), GraphError> {
        if !self.has_edge(u, v) {
            return Err(GraphError::MissingEdge(u, v));
        }
        Self::remove_sorted(&mut self.out_adj[u as usize], v);
        Self::remove_sorted(&mut self.in_adj[v as usize], u);
        if !self.directed {
            Self::remove_sorted(&mut self.out_adj[v as usize], u);
            Self::remove_sorted(&mut self.in_adj[u as usize], v);
        }
        self.num_edges -= 1;
        Ok(())
    }

    /// Applies toggle semantics: inserts `(u, v)` if absent, deletes it if
    /// present. Returns which operation was applied.
    pub fn toggle_edge(&mut self, u: NodeId, v: NodeId) -> Result<crate::stream::EdgeOp, GraphError> {
        if self.has_edge(u, v) {
            self.delete_edge(u, v)?;
            Ok(crate::stream::EdgeOp::Delete)
        } else {
            self.insert_edge(u, v)?;
            Ok(crate::stream::EdgeOp::Insert)
        }
    }

    /// Iterates over the surviving edge set, each edge once (for undirected
    /// graphs only the orientation `u < v` is yielded).
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.out_adj.iter().enumerate().flat_map(move |(u, adj)| {
            let u = u as NodeId;
            adj.iter()
                .copied()
                .filter(move |&v| self.directed || u < v)
                .map(move |v| (u, v))
        })
    }

    fn insert_sorted(adj: &mut Vec<NodeId>, x: NodeId) {
        if let Err(pos) = adj.binary_search(&x) {
            adj.insert(pos, x);
        }
    }

    fn remove_sorted(adj: &mut Vec<NodeId>, x: NodeId) {
        if let Ok(pos) = adj.binary_search(&x) {
            adj.remove(pos);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_delete_mirror_adjacency() {
        let mut g = DynamicGraph::with_nodes(3, true);
        g.insert_edge(0, 1).unwrap();
        g.insert_edge(0, 2).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(!g.has_edge(1, 0));
        assert_eq!(g.out_neighbors(0), &[1, 2]);
        assert_eq!(g.in_neighbors(1), &[0]);
        assert_eq!(g.degrees(0), (2, 0));
        assert_eq!(g.num_edges(), 2);

        g.delete_edge(0, 1).unwrap();
        assert!(!g.has_edge(0, 1));
        assert_eq!(g.in_neighbors(1), &[] as &[NodeId]);
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn undirected_stores_both_orientations_counts_once() {
        let mut g = DynamicGraph::with_nodes(2, false);
        g.insert_edge(0, 1).unwrap();
        assert!(g.has_edge(0, 1));
        assert!(g.has_edge(1, 0));
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.degrees(0), (1, 1));
        assert_eq!(g.degrees(1), (1, 1));
    }

    #[test]
    fn duplicate_insert_and_missing_delete_error() {
        let mut g = DynamicGraph::with_nodes(2, false);
        g.insert_edge(0, 1).unwrap();
        assert_eq!(g.insert_edge(1, 0), Err(GraphError::DuplicateEdge(1, 0)));
        g.delete_edge(1, 0).unwrap();
        assert_eq!(g.delete_edge(0, 1), Err(GraphError::MissingEdge(0, 1)));
        assert_eq!(g.insert_edge(0, 0), Err(GraphError::SelfLoop(0)));
    }

    #[test]
    fn node_ids_grow_lazily() {
        let mut g = DynamicGraph::with_nodes(1, true);
        g.insert_edge(0, 7).unwrap();
        assert_eq!(g.num_nodes(), 8);
        assert_eq!(g.out_degree(3), 0);
        // deleted-to-isolation nodes stay in the id space
        g.delete_edge(0, 7).unwrap();
        assert_eq!(g.num_nodes(), 8);
    }

    #[test]
    fn edges_iterator_yields_each_edge_once() {
        let mut g = DynamicGraph::with_nodes(3, false);
        g.insert_edge(2, 0).unwrap();
        g.insert_edge(1, 2).unwrap();
        let mut edges: Vec<_> = g.edges().collect();
        edges.sort();
        assert_eq!(edges, vec![(0, 2), (1, 2)]);
    }
}
