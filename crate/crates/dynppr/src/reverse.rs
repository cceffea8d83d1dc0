//! Dynamic reverse push: maintains a per-target estimate/residual pair under
//! edge updates so that every residual stays within `±ε`, which bounds the
//! additive error of every estimate by `ε`.
//!
//! The tracker keeps the invariant
//!
//! ```text
//! P(s,t) + α·R(s,t) = (1-α)·Σ_{x∈N_out(s)} P(x,t)/d_out(s) + α·[s = t]
//! ```
//!
//! at every node `s` (an empty sum for nodes without out-edges). A push at
//! `u` moves `α·R(u,t)` into the estimate and hands each in-neighbor `v` the
//! amount `(1-α)·R(u,t)/d_out(v)`; when `u` has no in-neighbors the remaining
//! mass is parked in a sink accumulator instead of a virtual graph vertex.
//!
//! An edge update touching `(u, v)` invalidates the invariant only at `u`
//! (only `u`'s out-degree changed), so the repair is a single residual
//! adjustment followed by a settle. Unlike the forward engine the threshold
//! here is unnormalized: `|R| ≤ ε`.

use std::collections::HashMap;

use crate::graph::{DynamicGraph, NodeId};
use crate::metrics::Metrics;
use crate::push::{add_sparse, dump_sparse_state, set_sparse, SettleError, WorkQueues,
    DEFAULT_PUSH_LIMIT};

/// Estimate/residual pair for a single target node.
#[derive(Debug, Clone)]
pub struct ReverseTracker {
    target: NodeId,
    alpha: f64,
    epsilon: f64,
    estimates: HashMap<NodeId, f64>,
    residuals: HashMap<NodeId, f64>,
    sink_mass: f64,
    queues: WorkQueues,
    push_limit: u64,
    pub metrics: Metrics,
}

impl ReverseTracker {
    /// Starts a tracker with all mass as residual at `target`, then settles.
    pub fn new(
        g: &DynamicGraph,
        target: NodeId,
        alpha: f64,
        epsilon: f64,
    ) -> Result<Self, SettleError> {
        assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
        assert!(epsilon > 0.0 && epsilon < 1.0, "epsilon must be in (0, 1)");
        assert!((target as usize) < g.num_nodes(), "target not in graph");
        let mut tracker = Self {
            target,
            alpha,
            epsilon,
            estimates: HashMap::new(),
            residuals: HashMap::new(),
            sink_mass: 0.0,
            queues: WorkQueues::default(),
            push_limit: DEFAULT_PUSH_LIMIT,
            metrics: Metrics::default(),
        };
        tracker.residuals.insert(target, 1.0);
        tracker.offer(target);
        tracker.settle(g)?;
        Ok(tracker)
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_push_limit(&mut self, limit: u64) {
        self.push_limit = limit;
    }

    /// `P(s, t)`, an additive-ε approximation of `π(s, t)`.
    pub fn estimate(&self, s: NodeId) -> f64 {
        self.estimates.get(&s).copied().unwrap_or(0.0)
    }

    pub fn residual(&self, s: NodeId) -> f64 {
        self.residuals.get(&s).copied().unwrap_or(0.0)
    }

    /// Mass discarded at pushes from nodes without in-neighbors.
    pub fn sink_mass(&self) -> f64 {
        self.sink_mass
    }

    pub fn storage_entries(&self) -> u64 {
        (self.estimates.len() + self.residuals.len()) as u64
    }

    pub fn storage_bytes(&self) -> u64 {
        8 * self.storage_entries()
    }

    fn offer(&mut self, u: NodeId) {
        let r = self.residual(u);
        self.queues.offer(u, r, self.epsilon);
    }

    fn bump_residual(&mut self, u: NodeId, delta: f64) {
        add_sparse(&mut self.residuals, u, delta);
        self.offer(u);
    }

    /// One push at `u`: `α·R(u,t)` joins the estimate, each in-neighbor `v`
    /// receives `(1-α)·R(u,t)/d_out(v)`, and the remainder goes to the sink
    /// when `u` has no in-neighbors.
    pub fn push_step(&mut self, g: &DynamicGraph, u: NodeId) {
        let r = self.residual(u);
        add_sparse(&mut self.estimates, u, self.alpha * r);
        self.residuals.remove(&u);
        let din = g.in_degree(u);
        if din > 0 {
            for &v in g.in_neighbors(u) {
                let share = (1.0 - self.alpha) * r / g.out_degree(v) as f64;
                self.bump_residual(v, share);
            }
        } else {
            self.sink_mass += (1.0 - self.alpha) * r;
        }
        self.metrics.push_iterations += 1;
        self.metrics.residual_updates += din as u64 + 1;
    }

    /// Pushes until every residual lies within `±ε`.
    pub fn settle(&mut self, g: &DynamicGraph) -> Result<(), SettleError> {
        let mut pushes: u64 = 0;
        loop {
            while let Some(u) = self.queues.pop_pos() {
                let r = self.residual(u);
                if r > self.epsilon {
                    self.push_step(g, u);
                    pushes += 1;
                    if pushes > self.push_limit {
                        return Err(SettleError::PushLimitExceeded {
                            limit: self.push_limit,
                        });
                    }
                } else {
                    self.offer(u);
                }
            }
            while let Some(u) = self.queues.pop_neg() {
                let r = self.residual(u);
                if r < -self.epsilon {
                    self.push_step(g, u);
                    pushes += 1;
                    if pushes > self.push_limit {
                        return Err(SettleError::PushLimitExceeded {
                            limit: self.push_limit,
                        });
                    }
                } else {
                    self.offer(u);
                }
            }
            if self.queues.is_empty() {
                return Ok(());
            }
        }
    }

    /// Repairs the invariant after `(u, v)` was inserted into `g` (which must
    /// already contain the edge), then settles. Undirected graphs apply the
    /// adjustment for both orientations before settling.
    pub fn on_edge_insert(
        &mut self,
        g: &DynamicGraph,
        u: NodeId,
        v: NodeId,
    ) -> Result<(), SettleError> {
        self.apply_insert_orientation(g, u, v);
        if !g.is_directed() {
            self.apply_insert_orientation(g, v, u);
        }
        self.settle(g)
    }

    /// Mirror of [`on_edge_insert`](Self::on_edge_insert) for a deletion.
    pub fn on_edge_delete(
        &mut self,
        g: &DynamicGraph,
        u: NodeId,
        v: NodeId,
    ) -> Result<(), SettleError> {
        self.apply_delete_orientation(g, u, v);
        if !g.is_directed() {
            self.apply_delete_orientation(g, v, u);
        }
        self.settle(g)
    }

    /// `u` gained the out-edge `(u, v)`; only `R(u,t)` changes. `d_out(u)`
    /// in the formula is the new (incremented) degree. The new degree 1 case
    /// sets the residual straight from the invariant, which is also what the
    /// incremental formula reduces to when the old state was consistent.
    fn apply_insert_orientation(&mut self, g: &DynamicGraph, u: NodeId, v: NodeId) {
        let d = g.out_degree(u) as f64;
        debug_assert!(d >= 1.0, "graph must already contain the inserted edge");
        let indicator = if u == self.target { self.alpha } else { 0.0 };
        let pv = self.estimate(v);
        let pu = self.estimate(u);
        if d == 1.0 {
            let restored = ((1.0 - self.alpha) * pv + indicator - pu) / self.alpha;
            set_sparse(&mut self.residuals, u, restored);
            self.offer(u);
        } else {
            let ru = self.residual(u);
            let delta =
                ((1.0 - self.alpha) * pv - pu - self.alpha * ru + indicator) / (self.alpha * d);
            self.bump_residual(u, delta);
        }
    }

    /// `u` lost the out-edge `(u, v)`; `d_out(u)` is the new (decremented)
    /// degree. Dropping to degree zero leaves an empty invariant row, so the
    /// residual is restored directly instead of via the formula.
    fn apply_delete_orientation(&mut self, g: &DynamicGraph, u: NodeId, v: NodeId) {
        let d = g.out_degree(u) as f64;
        let indicator = if u == self.target { self.alpha } else { 0.0 };
        if d == 0.0 {
            let restored = (indicator - self.estimate(u)) / self.alpha;
            set_sparse(&mut self.residuals, u, restored);
            self.offer(u);
        } else {
            let pv = self.estimate(v);
            let pu = self.estimate(u);
            let ru = self.residual(u);
            let delta =
                ((1.0 - self.alpha) * pv - pu - self.alpha * ru + indicator) / (self.alpha * d);
            self.bump_residual(u, -delta);
        }
    }

    /// Largest violation of the invariant over all nodes.
    pub fn max_invariant_gap(&self, g: &DynamicGraph) -> f64 {
        let mut max_gap = 0.0f64;
        for s in 0..g.num_nodes() as NodeId {
            let lhs = self.estimate(s) + self.alpha * self.residual(s);
            let d = g.out_degree(s);
            let mut rhs = if s == self.target { self.alpha } else { 0.0 };
            if d > 0 {
                let sum: f64 = g.out_neighbors(s).iter().map(|&x| self.estimate(x)).sum();
                rhs += (1.0 - self.alpha) * sum / d as f64;
            }
            max_gap = max_gap.max((lhs - rhs).abs());
        }
        max_gap
    }

    /// Sorted `node estimate residual` dump for golden tests.
    pub fn dump_state(&self) -> String {
        dump_sparse_state(&self.estimates, &self.residuals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALPHA: f64 = 0.2;

    #[test]
    fn single_reverse_push_arithmetic() {
        // u -> t with d_out(u) = 3: one push at t leaves P(t,t) = α and
        // R(u,t) = (1-α)/3
        let g = DynamicGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)], true).unwrap();
        let t = ReverseTracker::new(&g, 1, ALPHA, 0.5).unwrap();
        assert_eq!(t.estimate(1), 0.2);
        assert!((t.residual(0) - 0.8 / 3.0).abs() < 1e-15);
        assert_eq!(t.metrics.push_iterations, 1);
        assert_eq!(t.metrics.residual_updates, 2);
    }

    #[test]
    fn push_step_splits_residual_by_out_degree() {
        // in-neighbors a (d_out 2) and b (d_out 4) of node 2; target 3 has
        // no in-edges, so the initial settle leaves no residue behind
        let g = DynamicGraph::from_edges(
            7,
            &[(0, 2), (0, 4), (1, 2), (1, 4), (1, 5), (1, 6)],
            true,
        )
        .unwrap();
        let mut t = ReverseTracker::new(&g, 3, ALPHA, 0.9).unwrap();
        t.residuals.insert(2, 0.5);
        t.push_step(&g, 2);
        assert!((t.estimate(2) - 0.1).abs() < 1e-15);
        assert!((t.residual(0) - 0.2).abs() < 1e-15);
        assert!((t.residual(1) - 0.1).abs() < 1e-15);
        // the push wrote d_in(2) + 1 = 3 residual entries
        assert_eq!(t.metrics.residual_updates, 1 + 3);
    }

    #[test]
    fn push_at_zero_indegree_node_feeds_the_sink() {
        let g = DynamicGraph::from_edges(2, &[(0, 1)], true).unwrap();
        let mut t = ReverseTracker::new(&g, 1, ALPHA, 0.9).unwrap();
        t.residuals.insert(0, 1.0);
        t.push_step(&g, 0);
        assert!((t.estimate(0) - 0.2).abs() < 1e-15);
        assert!((t.sink_mass() - 0.8).abs() < 1e-15);
        assert_eq!(t.residual(0), 0.0);
    }

    #[test]
    fn two_cycle_converges_to_closed_form() {
        let g = DynamicGraph::from_edges(2, &[(0, 1)], false).unwrap();
        let t = ReverseTracker::new(&g, 1, ALPHA, 1e-8).unwrap();
        assert!((t.estimate(1) - 5.0 / 9.0).abs() < 1e-7);
        assert!((t.estimate(0) - 4.0 / 9.0).abs() < 1e-7);
        assert!(t.max_invariant_gap(&g) < 1e-12);
    }

    #[test]
    fn isolated_target_diverges_from_walk_semantics_but_keeps_invariant() {
        // target 3 is isolated: the tracker's estimate stops at α while the
        // walk from 3 always ends at 3 (π(3,3) = 1); the balance sits in the
        // sink. The invariant still holds everywhere.
        let g = DynamicGraph::from_edges(4, &[(0, 1), (1, 2)], false).unwrap();
        let t = ReverseTracker::new(&g, 3, ALPHA, 1e-6).unwrap();
        assert!((t.estimate(3) - ALPHA).abs() < 1e-12);
        assert!((t.sink_mass() - (1.0 - ALPHA)).abs() < 1e-12);
        assert!(t.max_invariant_gap(&g) < 1e-12);
        let truth = oracle::ppr_to_target(&g, 3, ALPHA).unwrap();
        assert_eq!(truth.value(3), 1.0);
    }

    #[test]
    fn insert_formula_evaluates_the_residual_delta() {
        // manufactured state, new d_out(u) = 2, u ≠ t:
        // ΔR = ((1-α)·0.5 − 0.1 − α·0.02) / (α·2) = 0.74
        let mut g = DynamicGraph::from_edges(4, &[(0, 1)], true).unwrap();
        let mut t = ReverseTracker::new(&g, 3, ALPHA, 0.9).unwrap();
        t.estimates.insert(2, 0.5);
        t.estimates.insert(0, 0.1);
        t.residuals.insert(0, 0.02);
        g.insert_edge(0, 2).unwrap();
        t.apply_insert_orientation(&g, 0, 2);
        assert!((t.residual(0) - (0.02 + 0.74)).abs() < 1e-12);
        // estimates untouched
        assert_eq!(t.estimate(0), 0.1);
        assert_eq!(t.estimate(2), 0.5);
    }

    #[test]
    fn insert_on_zero_state_is_a_no_op() {
        let mut g = DynamicGraph::from_edges(5, &[(0, 1), (2, 1)], true).unwrap();
        let mut t = ReverseTracker::new(&g, 1, ALPHA, 0.9).unwrap();
        // nodes 3, 4 carry no estimate or residual
        g.insert_edge(3, 4).unwrap();
        let before = t.dump_state();
        t.on_edge_insert(&g, 3, 4).unwrap();
        assert_eq!(t.dump_state(), before);
        assert_eq!(t.residual(3), 0.0);
    }

    #[test]
    fn delete_to_degree_zero_restores_invariant_directly() {
        let mut g = DynamicGraph::from_edges(2, &[(0, 1)], false).unwrap();
        let mut t = ReverseTracker::new(&g, 1, ALPHA, 1e-8).unwrap();
        g.delete_edge(0, 1).unwrap();
        t.on_edge_delete(&g, 0, 1).unwrap();
        assert!(t.max_invariant_gap(&g) < 1e-9);
        // estimate of the now-isolated target self-entry satisfies P+αR = α
        let lhs = t.estimate(1) + ALPHA * t.residual(1);
        assert!((lhs - ALPHA).abs() < 1e-9);
    }

    #[test]
    fn directed_graph_with_source_only_node_uses_the_sink() {
        // 3-cycle plus 3 -> 1: node 3 has no in-neighbors, so its pushed
        // mass lands in the sink, yet every estimate stays within ε
        let mut g =
            DynamicGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (3, 1)], true).unwrap();
        let eps = 1e-6;
        let mut t = ReverseTracker::new(&g, 1, ALPHA, eps).unwrap();
        assert!(t.sink_mass() > 0.0);
        assert!(t.max_invariant_gap(&g) < 1e-12);
        let truth = oracle::ppr_to_target(&g, 1, ALPHA).unwrap();
        for s in 0..4u32 {
            assert!((t.estimate(s) - truth.value(s)).abs() <= eps + 1e-9);
        }
        // an update through the sink-feeding node keeps the guarantee
        g.insert_edge(3, 0).unwrap();
        t.on_edge_insert(&g, 3, 0).unwrap();
        assert!(t.max_invariant_gap(&g) < 1e-12);
        let truth = oracle::ppr_to_target(&g, 1, ALPHA).unwrap();
        for s in 0..4u32 {
            assert!((t.estimate(s) - truth.value(s)).abs() <= eps + 1e-9);
        }
    }

    #[test]
    fn streamed_updates_stay_accurate_against_dense_oracle() {
        let n = 30;
        let mut g =
            DynamicGraph::from_edges(n, &gen::gnm_undirected(n, 50, 21), false).unwrap();
        let eps = 1e-4;
        let target: NodeId = 7;
        let mut t = ReverseTracker::new(&g, target, ALPHA, eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let (u, v) = loop {
                let u = rng.gen_range(0..n as NodeId);
                let v = rng.gen_range(0..n as NodeId);
                if u != v {
                    break (u, v);
                }
            };
            match g.toggle_edge(u, v).unwrap() {
                crate::stream::EdgeOp::Insert => t.on_edge_insert(&g, u, v).unwrap(),
                crate::stream::EdgeOp::Delete => t.on_edge_delete(&g, u, v).unwrap(),
            }
            assert!(t.max_invariant_gap(&g) < 1e-9);
            let truth = oracle::ppr_to_target(&g, target, ALPHA).unwrap();
            let target_isolated = g.degrees(target) == (0, 0);
            for s in 0..n as NodeId {
                if target_isolated && s == target {
                    continue; // sink semantics diverge from walk semantics here
                }
                let gap = (t.estimate(s) - truth.value(s)).abs();
                assert!(gap <= eps + 1e-9, "source {s}: {gap}");
            }
        }
    }

    #[test]
    fn incremental_matches_scratch_accuracy() {
        let n = 24;
        let edges = gen::gnm_undirected(n, 40, 8);
        let mut g = DynamicGraph::from_edges(n, &edges[..30], false).unwrap();
        let eps = 1e-3;
        let mut t = ReverseTracker::new(&g, 2, ALPHA, eps).unwrap();
        for &(u, v) in &edges[30..] {
            g.insert_edge(u, v).unwrap();
            t.on_edge_insert(&g, u, v).unwrap();
        }
        let scratch = ReverseTracker::new(&g, 2, ALPHA, eps).unwrap();
        let truth = oracle::ppr_to_target(&g, 2, ALPHA).unwrap();
        for s in 0..n as NodeId {
            assert!((t.estimate(s) - truth.value(s)).abs() <= eps + 1e-9);
            assert!((scratch.estimate(s) - truth.value(s)).abs() <= eps + 1e-9);
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let n = 25;
        let edges = gen::gnm_undirected(n, 40, 13);
        let run = || {
            let mut g = DynamicGraph::from_edges(n, &edges[..30], false).unwrap();
            let mut t = ReverseTracker::new(&g, 5, ALPHA, 1e-4).unwrap();
            for &(u, v) in &edges[30..] {
                g.insert_edge(u, v).unwrap();
                t.on_edge_insert(&g, u, v).unwrap();
            }
            t.dump_state()
        };
        assert_eq!(run(), run());
    }
}
