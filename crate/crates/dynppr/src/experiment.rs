//! Experiment harness: replays edge streams through the engines, collects
//! the work/accuracy metrics, and aggregates them into reports.
//!
//! The protocol: permute the input edges with the stream seed, initialize
//! every engine on the subgraph made of the first `split_fraction` of the
//! permutation, then feed the remaining edges through the graph and all
//! engines one by one. Sample vertices are drawn with the experiment seed,
//! independent of the permutation seed. Update time excludes initialization.

use std::io;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::forward::{top_k_by_value, ForwardTracker};
use crate::graph::{DynamicGraph, GraphError, NodeId};
use crate::oracle::{self, OracleError};
use crate::push::SettleError;
use crate::report::{
    Aggregates, CompareReport, ConfigEcho, GraphSummary, Report, SampleRow, TopkAggregates,
    TopkReport, TopkRow, SCHEMA_VERSION,
};
use crate::reverse::ReverseTracker;
use crate::snap::{dedup_undirected, load_snap, SnapError};
use crate::stream::{generate_stream, EdgeEvent, EdgeOp, StreamError};
use crate::walks::{build_walks, WalkIndex};

/// Largest graph for which the from-source l1 benchmark uses the power
/// iteration oracle; beyond it a fine-threshold push run stands in.
const FROM_SOURCE_ORACLE_LIMIT: usize = 10_000;
/// Largest graph for which the to-target benchmark may fall back to one
/// oracle run per source (needed on directed graphs with dangling nodes).
const TO_TARGET_PER_SOURCE_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Forward,
    Reverse,
    Montecarlo,
    ReverseScratch,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Mode::Forward => "forward",
            Mode::Reverse => "reverse",
            Mode::Montecarlo => "montecarlo",
            Mode::ReverseScratch => "reverse-scratch",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Mode::Forward),
            "reverse" => Ok(Mode::Reverse),
            "montecarlo" => Ok(Mode::Montecarlo),
            "reverse-scratch" => Ok(Mode::ReverseScratch),
            other => Err(format!(
                "unknown mode {other:?} (expected forward, reverse, montecarlo or reverse-scratch)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("mode {0} requires --epsilon in (0, 1)")]
    MissingEpsilon(Mode),
    #[error("mode montecarlo requires --walks >= 1")]
    MissingWalks,
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidSplit(f64),
    #[error("num_samples must be at least 1")]
    NoSamples,
    #[error("mode {0} does not support this command")]
    UnsupportedMode(Mode),
    #[error("top-k experiments require --topk >= 1")]
    MissingTopK,
    #[error(transparent)]
    Snap(#[from] SnapError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Settle(#[from] SettleError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Full description of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub graph_path: PathBuf,
    pub mode: Mode,
    pub alpha: f64,
    pub epsilon: Option<f64>,
    pub num_walks: Option<usize>,
    pub num_samples: usize,
    /// Seed for sampling test vertices (and walk seeds), independent of the
    /// stream permutation seed.
    pub seed: u64,
    pub stream_seed: u64,
    pub split_fraction: f64,
    pub top_k: Option<usize>,
    pub directed: bool,
}

impl ExperimentConfig {
    pub fn new(graph_path: PathBuf, mode: Mode) -> Self {
        Self {
            graph_path,
            mode,
            alpha: 0.2,
            epsilon: None,
            num_walks: None,
            num_samples: 100,
            seed: 0,
            stream_seed: 0,
            split_fraction: 0.5,
            top_k: None,
            directed: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ExperimentError::InvalidAlpha(self.alpha));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(ExperimentError::InvalidSplit(self.split_fraction));
        }
        if self.num_samples == 0 {
            return Err(ExperimentError::NoSamples);
        }
        match self.mode {
            Mode::Forward | Mode::Reverse | Mode::ReverseScratch => match self.epsilon {
                Some(e) if e > 0.0 && e < 1.0 => Ok(()),
                _ => Err(ExperimentError::MissingEpsilon(self.mode)),
            },
            Mode::Montecarlo => match self.num_walks {
                Some(r) if r >= 1 => Ok(()),
                _ => Err(ExperimentError::MissingWalks),
            },
        }
    }
}

/// Loaded input: initial graph plus the event tail of the permutation.
struct Prepared {
    graph: DynamicGraph,
    events: Vec<EdgeEvent>,
    samples: Vec<NodeId>,
    walk_seeds: Vec<u64>,
    initial_edges: usize,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    config.validate()?;
    let (mut edges, n) = load_snap(&config.graph_path)?;
    if !config.directed {
        edges = dedup_undirected(&edges);
    }
    let stream = generate_stream(&edges, config.stream_seed, config.split_fraction)?;
    let mut graph = DynamicGraph::with_nodes(n, config.directed);
    for &(u, v) in &stream.initial_edges {
        graph.insert_edge(u, v)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.num_samples.min(n);
    let mut samples: Vec<NodeId> = sample_indices(&mut rng, n, k)
        .into_iter()
        .map(|i| i as NodeId)
        .collect();
    samples.sort_unstable();
    let walk_seeds = (0..samples.len()).map(|_| rng.gen()).collect();
    Ok(Prepared {
        graph,
        events: stream.events,
        samples,
        walk_seeds,
        initial_edges: stream.initial_edges.len(),
    })
}

fn apply_event(g: &mut DynamicGraph, ev: &EdgeEvent) -> Result<(), GraphError> {
    match ev.op {
        EdgeOp::Insert => g.insert_edge(ev.u, ev.v),
        EdgeOp::Delete => g.delete_edge(ev.u, ev.v),
    }
}

/// Reference vector for `π(s, ·)`: the oracle on small graphs, a
/// fine-threshold (`0.02/n`) push run on large ones.
pub fn benchmark_from_source(
    g: &DynamicGraph,
    s: NodeId,
    alpha: f64,
) -> Result<Vec<f64>, ExperimentError> {
    let n = g.num_nodes();
    if n <= FROM_SOURCE_ORACLE_LIMIT {
        Ok(oracle::ppr_power(g, s, alpha, 1e-10, None)?.values)
    } else {
        let eps = 0.02 / n as f64;
        let tracker = ForwardTracker::new(g, s, alpha, eps)?;
        Ok((0..n as NodeId).map(|t| tracker.estimate(t)).collect())
    }
}

/// Reference vector for `π(·, t)`; mirrors [`benchmark_from_source`].
pub fn benchmark_to_target(
    g: &DynamicGraph,
    t: NodeId,
    alpha: f64,
) -> Result<Vec<f64>, ExperimentError> {
    let n = g.num_nodes();
    let dangling = (0..n).any(|u| g.out_degree(u as NodeId) == 0);
    let single_solve = n <= oracle::DENSE_NODE_LIMIT && (!g.is_directed() || !dangling);
    if single_solve || n <= TO_TARGET_PER_SOURCE_LIMIT {
        Ok(oracle::ppr_to_target(g, t, alpha)?.values)
    } else {
        let eps = 0.02 / n as f64;
        let tracker = ReverseTracker::new(g, t, alpha, eps)?;
        Ok((0..n as NodeId).map(|s| tracker.estimate(s)).collect())
    }
}

fn l1_distance(estimates: impl Iterator<Item = f64>, benchmark: &[f64]) -> f64 {
    estimates
        .zip(benchmark)
        .map(|(a, b)| (a - b).abs())
        .sum()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// Fraction of the true top-k recovered by the estimated top-k.
pub fn topk_precision(estimated: &[NodeId], truth: &[NodeId], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let truth: std::collections::HashSet<NodeId> = truth.iter().copied().collect();
    let hits = estimated.iter().filter(|x| truth.contains(x)).count();
    hits as f64 / k as f64
}

/// Runs the configured experiment end to end and returns its report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    let prepared = prepare(config)?;
    let Prepared {
        mut graph,
        events,
        samples,
        walk_seeds,
        initial_edges,
    } = prepared;
    let alpha = config.alpha;
    let mut durations = vec![Duration::ZERO; samples.len()];

    enum Engine {
        Forward(Vec<ForwardTracker>),
        Reverse(Vec<ReverseTracker>),
        Montecarlo(Vec<WalkIndex>),
        /// Per-target accumulated counters plus the latest rebuild.
        Scratch(Vec<(crate::metrics::Metrics, Option<ReverseTracker>)>),
    }

    let mut engine = match config.mode {
        Mode::Forward => {
            let eps = config.epsilon.expect("validated");
            Engine::Forward(
                samples
                    .iter()
                    .map(|&s| ForwardTracker::new(&graph, s, alpha, eps))
                    .collect::<Result<_, _>>()?,
            )
        }
        Mode::Reverse => {
            let eps = config.epsilon.expect("validated");
            Engine::Reverse(
                samples
                    .iter()
                    .map(|&t| ReverseTracker::new(&graph, t, alpha, eps))
                    .collect::<Result<_, _>>()?,
            )
        }
        Mode::Montecarlo => {
            let r = config.num_walks.expect("validated");
            Engine::Montecarlo(
                samples
                    .iter()
                    .zip(&walk_seeds)
                    .map(|(&s, &seed)| build_walks(&graph, s, alpha, r, seed))
                    .collect(),
            )
        }
        Mode::ReverseScratch => Engine::Scratch(
            samples
                .iter()
                .map(|_| (crate::metrics::Metrics::default(), None))
                .collect(),
        ),
    };

    for ev in &events {
        apply_event(&mut graph, ev)?;
        match &mut engine {
            Engine::Forward(trackers) => {
                for (tracker, dur) in trackers.iter_mut().zip(&mut durations) {
                    let t0 = Instant::now();
                    match ev.op {
                        EdgeOp::Insert => tracker.on_edge_insert(&graph, ev.u, ev.v)?,
                        EdgeOp::Delete => tracker.on_edge_delete(&graph, ev.u, ev.v)?,
                    }
                    *dur += t0.elapsed();
                }
            }
            Engine::Reverse(trackers) => {
                for (tracker, dur) in trackers.iter_mut().zip(&mut durations) {
                    let t0 = Instant::now();
                    match ev.op {
                        EdgeOp::Insert => tracker.on_edge_insert(&graph, ev.u, ev.v)?,
                        EdgeOp::Delete => tracker.on_edge_delete(&graph, ev.u, ev.v)?,
                    }
                    *dur += t0.elapsed();
                }
            }
            Engine::Montecarlo(indices) => {
                for (wi, dur) in indices.iter_mut().zip(&mut durations) {
                    let t0 = Instant::now();
                    match ev.op {
                        EdgeOp::Insert => wi.on_edge_insert(&graph, ev.u, ev.v),
                        EdgeOp::Delete => wi.on_edge_delete(&graph, ev.u, ev.v),
                    };
                    *dur += t0.elapsed();
                }
            }
            Engine::Scratch(states) => {
                let eps = config.epsilon.expect("validated");
                for (i, (accum, latest)) in states.iter_mut().enumerate() {
                    let t0 = Instant::now();
                    let tracker = ReverseTracker::new(&graph, samples[i], alpha, eps)?;
                    durations[i] += t0.elapsed();
                    accum.absorb_counters(&tracker.metrics);
                    *latest = Some(tracker);
                }
            }
        }
    }

    let wants_topk = config.top_k.filter(|&k| k > 0);
    let mut rows = Vec::with_capacity(samples.len());
    for (i, &vertex) in samples.iter().enumerate() {
        let wall = durations[i].as_secs_f64();
        let row = match &engine {
            Engine::Forward(trackers) => {
                let tr = &trackers[i];
                let bench = benchmark_from_source(&graph, vertex, alpha)?;
                let l1 = l1_distance((0..bench.len() as NodeId).map(|t| tr.estimate(t)), &bench);
                let precision = wants_topk
                    .map(|k| {
                        let truth = top_k_by_value(graph.num_nodes(), k, |t| bench[t as usize]);
                        topk_precision(&tr.top_k(&graph, k), &truth, k)
                    });
                SampleRow {
                    vertex,
                    residual_updates: tr.metrics.residual_updates,
                    push_iterations: tr.metrics.push_iterations,
                    wall_time_seconds: wall,
                    l1_error: l1,
                    storage_entries: tr.storage_entries(),
                    storage_bytes: tr.storage_bytes(),
                    topk_precision: precision,
                }
            }
            Engine::Reverse(trackers) => {
                let tr = &trackers[i];
                let bench = benchmark_to_target(&graph, vertex, alpha)?;
                let l1 = l1_distance((0..bench.len() as NodeId).map(|s| tr.estimate(s)), &bench);
                SampleRow {
                    vertex,
                    residual_updates: tr.metrics.residual_updates,
                    push_iterations: tr.metrics.push_iterations,
                    wall_time_seconds: wall,
                    l1_error: l1,
                    storage_entries: tr.storage_entries(),
                    storage_bytes: tr.storage_bytes(),
                    topk_precision: None,
                }
            }
            Engine::Montecarlo(indices) => {
                let wi = &indices[i];
                let bench = benchmark_from_source(&graph, vertex, alpha)?;
                let dist = wi.endpoint_distribution(&graph);
                let l1 = l1_distance(dist.iter().copied(), &bench);
                let precision = wants_topk
                    .map(|k| {
                        let truth = top_k_by_value(graph.num_nodes(), k, |t| bench[t as usize]);
                        topk_precision(&wi.top_k(&graph, k), &truth, k)
                    });
                SampleRow {
                    vertex,
                    residual_updates: 0,
                    push_iterations: 0,
                    wall_time_seconds: wall,
                    l1_error: l1,
                    storage_entries: wi.storage_entries(),
                    storage_bytes: wi.storage_bytes(),
                    topk_precision: precision,
                }
            }
            Engine::Scratch(states) => {
                let (accum, latest) = &states[i];
                let eps = config.epsilon.expect("validated");
                let tracker = match latest {
                    Some(t) => t.clone(),
                    None => ReverseTracker::new(&graph, vertex, alpha, eps)?,
                };
                let bench = benchmark_to_target(&graph, vertex, alpha)?;
                let l1 = l1_distance(
                    (0..bench.len() as NodeId).map(|s| tracker.estimate(s)),
                    &bench,
                );
                SampleRow {
                    vertex,
                    residual_updates: accum.residual_updates,
                    push_iterations: accum.push_iterations,
                    wall_time_seconds: wall,
                    l1_error: l1,
                    storage_entries: tracker.storage_entries(),
                    storage_bytes: tracker.storage_bytes(),
                    topk_precision: None,
                }
            }
        };
        rows.push(row);
    }

    let aggregates = Aggregates {
        mean_residual_updates: mean(rows.iter().map(|r| r.residual_updates as f64)),
        mean_push_iterations: mean(rows.iter().map(|r| r.push_iterations as f64)),
        mean_wall_time_seconds: mean(rows.iter().map(|r| r.wall_time_seconds)),
        median_l1_error: median(&rows.iter().map(|r| r.l1_error).collect::<Vec<_>>()),
        mean_storage_entries: mean(rows.iter().map(|r| r.storage_entries as f64)),
        mean_storage_bytes: mean(rows.iter().map(|r| r.storage_bytes as f64)),
        median_topk_precision: if rows.iter().any(|r| r.topk_precision.is_some()) {
            Some(median(
                &rows
                    .iter()
                    .filter_map(|r| r.topk_precision)
                    .collect::<Vec<_>>(),
            ))
        } else {
            None
        },
    };

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho::from_config(config),
        graph: GraphSummary {
            nodes: graph.num_nodes(),
            initial_edges,
            events: events.len(),
        },
        samples: rows,
        aggregates,
    })
}

/// Replays the stream once, maintaining reverse trackers incrementally while
/// rebuilding them from scratch at `scratch_samples` evenly spaced events.
/// The scratch curve is extrapolated to all events by the measured mean.
pub fn compare_scratch_vs_incremental(
    config: &ExperimentConfig,
    scratch_samples: usize,
) -> Result<CompareReport, ExperimentError> {
    if config.mode != Mode::Reverse {
        return Err(ExperimentError::UnsupportedMode(config.mode));
    }
    let prepared = prepare(config)?;
    let Prepared {
        mut graph,
        events,
        samples,
        initial_edges,
        ..
    } = prepared;
    let alpha = config.alpha;
    let eps = config.epsilon.expect("validated");
    let mut trackers: Vec<ReverseTracker> = samples
        .iter()
        .map(|&t| ReverseTracker::new(&graph, t, alpha, eps))
        .collect::<Result<_, _>>()?;

    let k = events.len();
    let picks = scratch_samples.clamp(1, k);
    let scratch_set: Vec<usize> = (1..=picks).map(|j| j * k / picks - 1).collect();

    let mut incremental_cumulative = Vec::with_capacity(k);
    let mut incremental_total = Duration::ZERO;
    let mut scratch_measured = Vec::new();
    let mut scratch_indices = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        apply_event(&mut graph, ev)?;
        let t0 = Instant::now();
        for tracker in &mut trackers {
            match ev.op {
                EdgeOp::Insert => tracker.on_edge_insert(&graph, ev.u, ev.v)?,
                EdgeOp::Delete => tracker.on_edge_delete(&graph, ev.u, ev.v)?,
            }
        }
        incremental_total += t0.elapsed();
        incremental_cumulative.push(incremental_total.as_secs_f64());
        if scratch_set.binary_search(&i).is_ok() {
            let t0 = Instant::now();
            for &target in &samples {
                ReverseTracker::new(&graph, target, alpha, eps)?;
            }
            scratch_measured.push(t0.elapsed().as_secs_f64());
            scratch_indices.push(ev.index);
        }
    }
    let scratch_mean = mean(scratch_measured.iter().copied());
    let scratch_cumulative: Vec<f64> = (1..=k).map(|i| scratch_mean * i as f64).collect();
    let scratch_total = scratch_mean * k as f64;
    let incremental_total = incremental_total.as_secs_f64();

    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho::from_config(config),
        graph: GraphSummary {
            nodes: graph.num_nodes(),
            initial_edges,
            events: k,
        },
        scratch_samples: scratch_measured.len(),
        scratch_measured_event_indices: scratch_indices,
        incremental_cumulative_seconds: incremental_cumulative,
        scratch_cumulative_seconds: scratch_cumulative,
        incremental_total_seconds: incremental_total,
        scratch_total_seconds: scratch_total,
        scratch_mean_seconds_per_event: scratch_mean,
        speedup: if incremental_total > 0.0 {
            scratch_total / incremental_total
        } else {
            f64::INFINITY
        },
    })
}

/// Top-k protocol: maintain a forward tracker or walk index per sampled
/// source through the stream, then score its final top-k against the
/// benchmark ranking.
pub fn run_topk(config: &ExperimentConfig) -> Result<TopkReport, ExperimentError> {
    let k = config.top_k.filter(|&k| k > 0).ok_or(ExperimentError::MissingTopK)?;
    if !matches!(config.mode, Mode::Forward | Mode::Montecarlo) {
        return Err(ExperimentError::UnsupportedMode(config.mode));
    }
    let mut config_with_topk = config.clone();
    config_with_topk.top_k = Some(k);
    let report = run_experiment(&config_with_topk)?;
    let samples: Vec<TopkRow> = report
        .samples
        .iter()
        .map(|row| TopkRow {
            vertex: row.vertex,
            precision: row.topk_precision.unwrap_or(0.0),
            wall_time_seconds: row.wall_time_seconds,
            storage_entries: row.storage_entries,
            storage_bytes: row.storage_bytes,
        })
        .collect();
    let aggregates = TopkAggregates {
        median_precision: median(&samples.iter().map(|r| r.precision).collect::<Vec<_>>()),
        mean_wall_time_seconds: mean(samples.iter().map(|r| r.wall_time_seconds)),
        mean_storage_entries: mean(samples.iter().map(|r| r.storage_entries as f64)),
        mean_storage_bytes: mean(samples.iter().map(|r| r.storage_bytes as f64)),
    };
    Ok(TopkReport {
        schema_version: SCHEMA_VERSION,
        config: report.config,
        graph: report.graph,
        samples,
        aggregates,
    })
}
