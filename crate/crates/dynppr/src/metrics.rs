//! Work and accuracy counters collected while maintaining a tracker.

use serde::Serialize;

/// Counters mirroring the benchmark measurement list. The push engines only
/// touch `residual_updates` and `push_iterations`; the harness fills in the
/// rest per sample. Counters are monotone non-decreasing within a run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Metrics {
    /// Number of residual-entry writes performed by push operations.
    pub residual_updates: u64,
    /// Number of push operations performed.
    pub push_iterations: u64,
    /// Update time in seconds, excluding initialization.
    pub wall_time_seconds: f64,
    /// l1 distance between maintained estimates and the benchmark values.
    pub l1_error: f64,
    /// Nonzero estimate and residual entries (push) or stored walk nodes (MC).
    pub storage_entries: u64,
    /// Storage in bytes: 8 per push entry, 4 per stored walk node.
    pub storage_bytes: u64,
}

impl Metrics {
    /// Adds the counters of `other` into `self` (used when scratch mode
    /// rebuilds a tracker per event).
    pub fn absorb_counters(&mut self, other: &Metrics) {
        self.residual_updates += other.residual_updates;
        self.push_iterations += other.push_iterations;
    }
}
