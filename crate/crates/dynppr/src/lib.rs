//! Incremental maintenance of approximate personalized PageRank (PPR) on
//! graphs under streams of edge insertions and deletions.
//!
//! Three engines share one mutable graph substrate:
//!
//! - [`ForwardTracker`]: per-source estimate/residual pair, degree-normalized
//!   error bound, maintained by local pushes along out-edges.
//! - [`ReverseTracker`]: per-target pair, additive error bound, maintained by
//!   local pushes along reversed edges.
//! - [`WalkIndex`]: stored random walks with an inverted visit index,
//!   maintained by rerouting the walks an edge update invalidates.
//!
//! Each engine reacts to an edge update with a constant-size local repair of
//! its invariant followed by just enough work to restore its error bound,
//! instead of recomputing from scratch. The [`oracle`] module provides exact
//! PPR (power iteration and dense solves) for tests and benchmark error
//! measurement, and [`experiment`] replays streams through the engines and
//! aggregates the measurements into [`report`]s.
//!
//! ```
//! use dynppr::{DynamicGraph, ForwardTracker};
//!
//! let mut g = DynamicGraph::from_edges(3, &[(0, 1), (1, 2)], false).unwrap();
//! let mut tracker = ForwardTracker::new(&g, 0, 0.2, 1e-6).unwrap();
//!
//! g.insert_edge(0, 2).unwrap();
//! tracker.on_edge_insert(&g, 0, 2).unwrap();
//!
//! let p = tracker.estimate(2);
//! assert!(p > 0.0 && p < 1.0);
//! ```

pub mod experiment;
pub mod forward;
pub mod gen;
pub mod graph;
pub mod metrics;
pub mod oracle;
mod push;
pub mod report;
pub mod reverse;
pub mod snap;
pub mod stream;
pub mod walks;

pub use experiment::{
    benchmark_from_source, benchmark_to_target, compare_scratch_vs_incremental, run_experiment,
    run_topk, topk_precision, ExperimentConfig, ExperimentError, Mode,
};
pub use forward::ForwardTracker;
pub use graph::{DynamicGraph, GraphError, NodeId};
pub use metrics::Metrics;
pub use oracle::{
    check_reversibility, dense_solve, phi_vector, ppr_power, ppr_to_target, Direction,
    OracleError, PprVector,
};
pub use push::SettleError;
pub use report::{emit_report, Render, Report, ReportFormat};
pub use reverse::ReverseTracker;
pub use snap::{dedup_undirected, load_snap, SnapError};
pub use stream::{generate_stream, EdgeEvent, EdgeOp, EdgeStream, StreamError};
pub use walks::{build_walks, WalkIndex};
