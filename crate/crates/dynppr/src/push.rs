//! Shared machinery for the two local-push engines: the sign-split FIFO work
//! queues and the settle loop's circuit breaker.

use std::collections::{HashSet, VecDeque};

use thiserror::Error;

use crate::graph::NodeId;

/// Sparse-map entries with absolute value below this are evicted, so that
/// storage counters only see genuinely nonzero state.
pub(crate) const EVICT_BELOW: f64 = 1e-15;

/// Default circuit breaker: a single settle may not exceed this many pushes.
pub(crate) const DEFAULT_PUSH_LIMIT: u64 = 1_000_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SettleError {
    #[error("settle exceeded the push limit of {limit} iterations")]
    PushLimitExceeded { limit: u64 },
}

/// FIFO queues of threshold violators, one per sign. A node holds at most
/// one queue slot; membership is re-checked against the live residual when
/// the node is popped, so stale entries are harmless.
#[derive(Debug, Clone, Default)]
pub(crate) struct WorkQueues {
    pos: VecDeque<NodeId>,
    neg: VecDeque<NodeId>,
    queued: HashSet<NodeId>,
}

impl WorkQueues {
    /// Enqueues `node` if its normalized residual violates `±epsilon` and it
    /// does not already hold a slot.
    pub fn offer(&mut self, node: NodeId, normalized_residual: f64, epsilon: f64) {
        if self.queued.contains(&node) {
            return;
        }
        if normalized_residual > epsilon {
            self.queued.insert(node);
            self.pos.push_back(node);
        } else if normalized_residual < -epsilon {
            self.queued.insert(node);
            self.neg.push_back(node);
        }
    }

    pub fn pop_pos(&mut self) -> Option<NodeId> {
        let node = self.pos.pop_front()?;
        self.queued.remove(&node);
        Some(node)
    }

    pub fn pop_neg(&mut self) -> Option<NodeId> {
        let node = self.neg.pop_front()?;
        self.queued.remove(&node);
        Some(node)
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

/// Adds `delta` to the map entry for `node`, evicting near-zero results.
pub(crate) fn add_sparse(
    map: &mut std::collections::HashMap<NodeId, f64>,
    node: NodeId,
    delta: f64,
) -> f64 {
    let entry = map.entry(node).or_insert(0.0);
    *entry += delta;
    let value = *entry;
    if value.abs() < EVICT_BELOW {
        map.remove(&node);
        return 0.0;
    }
    value
}

/// Sets the map entry for `node`, evicting near-zero values.
pub(crate) fn set_sparse(
    map: &mut std::collections::HashMap<NodeId, f64>,
    node: NodeId,
    value: f64,
) {
    if value.abs() < EVICT_BELOW {
        map.remove(&node);
    } else {
        map.insert(node, value);
    }
}

/// Sorted `node estimate residual` text dump of a tracker's sparse state.
pub(crate) fn dump_sparse_state(
    estimates: &std::collections::HashMap<NodeId, f64>,
    residuals: &std::collections::HashMap<NodeId, f64>,
) -> String {
    let mut nodes: Vec<NodeId> = estimates.keys().chain(residuals.keys()).copied().collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut out = String::new();
    for node in nodes {
        let p = estimates.get(&node).copied().unwrap_or(0.0);
        let r = residuals.get(&node).copied().unwrap_or(0.0);
        out.push_str(&format!("{} {} {}\n", node, p, r));
    }
    out
}
