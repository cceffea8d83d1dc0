//! Monte-Carlo baseline: a set of stored random walks from one source,
//! maintained under edge updates by rerouting the affected walks.
//!
//! Each walk records its full trajectory (rerouting needs visit positions),
//! inverted into a node → (walk, position) index. An inserted edge `(u, v)`
//! should have been taken at each continued visit to `u` with probability
//! `1/d_out(u)` (new degree), so each such visit flips an independent coin
//! and the first success truncates the walk there, steps to `v`, and
//! resamples the continuation — at most one reroute per walk per event. A
//! deleted edge reroutes exactly the walks that traversed it, resampling the
//! step from the surviving out-edges.
//!
//! On undirected graphs an event changes the walk law at both endpoints, so
//! the scan covers continued visits to either endpoint in trajectory order,
//! flipping the coin of whichever endpoint is visited; the first success
//! still ends the scan for that walk.
//!
//! Walks draw from per-walk RNG streams, so replays are reproducible and the
//! coins of different walks stay independent within an event.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::forward::top_k_by_value;
use crate::graph::{DynamicGraph, NodeId};

/// `r` stored random walks from a single source with an inverted visit index.
#[derive(Debug, Clone)]
pub struct WalkIndex {
    source: NodeId,
    alpha: f64,
    walks: Vec<Vec<NodeId>>,
    visit_index: HashMap<NodeId, BTreeSet<(u32, u32)>>,
    endpoint_counts: HashMap<NodeId, u32>,
    rngs: Vec<ChaCha8Rng>,
}

/// Builds `r` independent geometric-length walks from `s`. A walk continues
/// with probability `1 - alpha` per step; a node without out-edges sends the
/// walk back to `s`.
pub fn build_walks(g: &DynamicGraph, s: NodeId, alpha: f64, r: usize, seed: u64) -> WalkIndex {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
    assert!(r > 0, "need at least one walk");
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut index = WalkIndex {
        source: s,
        alpha,
        walks: Vec::with_capacity(r),
        visit_index: HashMap::new(),
        endpoint_counts: HashMap::new(),
        rngs: Vec::with_capacity(r),
    };
    for w in 0..r {
        let mut rng = base.clone();
        rng.set_stream(w as u64);
        let mut path = vec![s];
        extend_path(g, s, alpha, &mut path, &mut rng);
        for (pos, &node) in path.iter().enumerate() {
            index
                .visit_index
                .entry(node)
                .or_default()
                .insert((w as u32, pos as u32));
        }
        *index.endpoint_counts.entry(*path.last().unwrap()).or_insert(0) += 1;
        index.walks.push(path);
        index.rngs.push(rng);
    }
    index
}

/// Extends `path` from its last node until the `alpha`-coin stops the walk.
fn extend_path(
    g: &DynamicGraph,
    source: NodeId,
    alpha: f64,
    path: &mut Vec<NodeId>,
    rng: &mut ChaCha8Rng,
) {
    let mut cur = *path.last().expect("path starts at the source");
    loop {
        if rng.gen::<f64>() < alpha {
            return;
        }
        cur = step(g, source, cur, rng);
        path.push(cur);
    }
}

fn step(g: &DynamicGraph, source: NodeId, cur: NodeId, rng: &mut ChaCha8Rng) -> NodeId {
    let d = g.out_degree(cur);
    if d == 0 {
        source
    } else {
        g.out_neighbors(cur)[rng.gen_range(0..d)]
    }
}

impl WalkIndex {
    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn num_walks(&self) -> usize {
        self.walks.len()
    }

    pub fn walk(&self, w: usize) -> &[NodeId] {
        &self.walks[w]
    }

    /// Endpoint frequency of `t` among the stored walks.
    pub fn estimate(&self, t: NodeId) -> f64 {
        self.endpoint_counts.get(&t).copied().unwrap_or(0) as f64 / self.walks.len() as f64
    }

    /// Endpoint frequencies as a dense vector over the graph's nodes.
    pub fn endpoint_distribution(&self, g: &DynamicGraph) -> Vec<f64> {
        let mut dist = vec![0.0; g.num_nodes()];
        for (&node, &count) in &self.endpoint_counts {
            dist[node as usize] = count as f64 / self.walks.len() as f64;
        }
        dist
    }

    /// Top `k` nodes by endpoint frequency, ties broken by ascending id.
    pub fn top_k(&self, g: &DynamicGraph, k: usize) -> Vec<NodeId> {
        top_k_by_value(g.num_nodes(), k, |t| self.estimate(t))
    }

    /// Stored-walk footprint: total trajectory nodes times 4 bytes. The
    /// inverted index is not included; see [`index_bytes`](Self::index_bytes).
    pub fn storage_bytes(&self) -> u64 {
        4 * self.storage_entries()
    }

    /// Total trajectory nodes across all walks.
    pub fn storage_entries(&self) -> u64 {
        self.walks.iter().map(|w| w.len() as u64).sum()
    }

    /// Raw size of the inverted visit index (one walk id + position pair per
    /// visit), reported separately from [`storage_bytes`](Self::storage_bytes).
    pub fn index_bytes(&self) -> u64 {
        8 * self
            .visit_index
            .values()
            .map(|v| v.len() as u64)
            .sum::<u64>()
    }

    /// Edge `(u, v)` was inserted into `g` (which must already contain it).
    /// Returns the number of rerouted walks.
    pub fn on_edge_insert(&mut self, g: &DynamicGraph, u: NodeId, v: NodeId) -> usize {
        debug_assert!(g.has_edge(u, v));
        let hops: &[(NodeId, NodeId)] = if g.is_directed() {
            &[(u, v)]
        } else {
            &[(u, v), (v, u)]
        };
        let mut rerouted = 0;
        for (w, visits) in self.affected_walks(hops) {
            for (pos, next) in visits {
                if pos + 1 >= self.walks[w].len() {
                    continue; // the walk stopped here; no edge choice to revise
                }
                let from = self.walks[w][pos];
                let take_prob = 1.0 / g.out_degree(from) as f64;
                if self.rngs[w].gen::<f64>() < take_prob {
                    self.reroute(g, w, pos, Some(next));
                    rerouted += 1;
                    break;
                }
            }
        }
        rerouted
    }

    /// Edge `(u, v)` was deleted from `g` (which must already lack it).
    /// Every walk that traversed the edge — in either direction when the
    /// graph is undirected — is truncated at the first traversal and
    /// resampled from the surviving out-edges; walks merely visiting the
    /// endpoints are untouched. Returns the number of rerouted walks.
    pub fn on_edge_delete(&mut self, g: &DynamicGraph, u: NodeId, v: NodeId) -> usize {
        debug_assert!(!g.has_edge(u, v));
        let hops: &[(NodeId, NodeId)] = if g.is_directed() {
            &[(u, v)]
        } else {
            &[(u, v), (v, u)]
        };
        let mut rerouted = 0;
        for (w, visits) in self.affected_walks(hops) {
            let traversal = visits.iter().find(|&&(pos, next)| {
                pos + 1 < self.walks[w].len() && self.walks[w][pos + 1] == next
            });
            if let Some(&(pos, _)) = traversal {
                self.reroute(g, w, pos, None);
                rerouted += 1;
            }
        }
        rerouted
    }

    /// Walks visiting the source endpoint of any hop, as
    /// `(walk, [(position, hop target)])` with positions in trajectory order.
    fn affected_walks(&self, hops: &[(NodeId, NodeId)]) -> Vec<(usize, Vec<(usize, NodeId)>)> {
        let mut triples: Vec<(u32, u32, NodeId)> = Vec::new();
        for &(from, to) in hops {
            if let Some(visits) = self.visit_index.get(&from) {
                triples.extend(visits.iter().map(|&(w, pos)| (w, pos, to)));
            }
        }
        triples.sort_unstable_by_key(|&(w, pos, _)| (w, pos));
        let mut grouped: Vec<(usize, Vec<(usize, NodeId)>)> = Vec::new();
        for (w, pos, to) in triples {
            match grouped.last_mut() {
                Some((last, visits)) if *last == w as usize => {
                    visits.push((pos as usize, to))
                }
                _ => grouped.push((w as usize, vec![(pos as usize, to)])),
            }
        }
        grouped
    }

    /// Cuts walk `w` after position `pos` and regrows it: through `forced`
    /// when the rerouting edge dictates the next hop, otherwise by redrawing
    /// the step from the current graph.
    fn reroute(&mut self, g: &DynamicGraph, w: usize, pos: usize, forced: Option<NodeId>) {
        let old_endpoint = *self.walks[w].last().unwrap();
        match self.endpoint_counts.get_mut(&old_endpoint) {
            Some(c) if *c > 1 => *c -= 1,
            _ => {
                self.endpoint_counts.remove(&old_endpoint);
            }
        }
        for (q, &node) in self.walks[w].iter().enumerate().skip(pos + 1) {
            let visits = self.visit_index.get_mut(&node).expect("indexed visit");
            visits.remove(&(w as u32, q as u32));
            if visits.is_empty() {
                self.visit_index.remove(&node);
            }
        }
        self.walks[w].truncate(pos + 1);
        let next = match forced {
            Some(v) => v,
            None => {
                let cur = *self.walks[w].last().unwrap();
                step(g, self.source, cur, &mut self.rngs[w])
            }
        };
        self.walks[w].push(next);
        extend_path(g, self.source, self.alpha, &mut self.walks[w], &mut self.rngs[w]);
        for (q, &node) in self.walks[w].iter().enumerate().skip(pos + 1) {
            self.visit_index
                .entry(node)
                .or_default()
                .insert((w as u32, q as u32));
        }
        *self
            .endpoint_counts
            .entry(*self.walks[w].last().unwrap())
            .or_insert(0) += 1;
    }

    /// Verifies that the inverted index and endpoint counts exactly match
    /// the stored trajectories.
    pub fn check_index_inversion(&self) -> bool {
        let mut expected_index: HashMap<NodeId, BTreeSet<(u32, u32)>> = HashMap::new();
        let mut expected_counts: HashMap<NodeId, u32> = HashMap::new();
        for (w, path) in self.walks.iter().enumerate() {
            if path.first() != Some(&self.source) {
                return false;
            }
            for (pos, &node) in path.iter().enumerate() {
                expected_index
                    .entry(node)
                    .or_default()
                    .insert((w as u32, pos as u32));
            }
            *expected_counts.entry(*path.last().unwrap()).or_insert(0) += 1;
        }
        expected_index == self.visit_index && expected_counts == self.endpoint_counts
    }
}
