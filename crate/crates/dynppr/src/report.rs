//! Report schemas and serialization for the benchmark harness.
//!
//! Reports serialize with a fixed field order (struct declaration order for
//! JSON, pinned column lists for CSV), so two runs with identical
//! configuration produce byte-identical output except for the wall-time
//! fields. The JSON schema is versioned through `schema_version`.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::experiment::{ExperimentConfig, Mode};
use crate::graph::NodeId;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

/// Configuration echo embedded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub graph: String,
    pub mode: Mode,
    pub alpha: f64,
    pub epsilon: Option<f64>,
    pub num_walks: Option<usize>,
    pub num_samples: usize,
    pub seed: u64,
    pub stream_seed: u64,
    pub split_fraction: f64,
    pub top_k: Option<usize>,
    pub directed: bool,
}

impl ConfigEcho {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            graph: config.graph_path.display().to_string(),
            mode: config.mode,
            alpha: config.alpha,
            epsilon: config.epsilon,
            num_walks: config.num_walks,
            num_samples: config.num_samples,
            seed: config.seed,
            stream_seed: config.stream_seed,
            split_fraction: config.split_fraction,
            top_k: config.top_k,
            directed: config.directed,
        }
    }

    fn csv_comments(&self, out: &mut String) {
        let _ = writeln!(out, "# schema_version={SCHEMA_VERSION}");
        let _ = writeln!(out, "# graph={}", self.graph);
        let _ = writeln!(out, "# mode={}", self.mode);
        let _ = writeln!(out, "# alpha={}", self.alpha);
        let _ = writeln!(out, "# epsilon={}", opt(self.epsilon));
        let _ = writeln!(out, "# num_walks={}", opt(self.num_walks));
        let _ = writeln!(out, "# num_samples={}", self.num_samples);
        let _ = writeln!(out, "# seed={}", self.seed);
        let _ = writeln!(out, "# stream_seed={}", self.stream_seed);
        let _ = writeln!(out, "# split_fraction={}", self.split_fraction);
        let _ = writeln!(out, "# top_k={}", opt(self.top_k));
        let _ = writeln!(out, "# directed={}", self.directed);
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub initial_edges: usize,
    pub events: usize,
}

/// One tracked sample vertex and its collected metrics.
#[derive(Debug, Clone, Serialize)]
pub struct SampleRow {
    pub vertex: NodeId,
    pub residual_updates: u64,
    pub push_iterations: u64,
    pub wall_time_seconds: f64,
    pub l1_error: f64,
    pub storage_entries: u64,
    pub storage_bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topk_precision: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Aggregates {
    pub mean_residual_updates: f64,
    pub mean_push_iterations: f64,
    pub mean_wall_time_seconds: f64,
    pub median_l1_error: f64,
    pub mean_storage_entries: f64,
    pub mean_storage_bytes: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_topk_precision: Option<f64>,
}

/// Output of the `run` command: per-sample metrics plus aggregates (means of
/// counters and time, median of the l1 error).
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub graph: GraphSummary,
    pub samples: Vec<SampleRow>,
    pub aggregates: Aggregates,
}

/// Output of the `compare` command: cumulative update-cost curves for
/// incremental maintenance vs. from-scratch recomputation per event. The
/// scratch curve is extrapolated from a subsample of events by its mean.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub graph: GraphSummary,
    pub scratch_samples: usize,
    pub scratch_measured_event_indices: Vec<u32>,
    pub incremental_cumulative_seconds: Vec<f64>,
    pub scratch_cumulative_seconds: Vec<f64>,
    pub incremental_total_seconds: f64,
    pub scratch_total_seconds: f64,
    pub scratch_mean_seconds_per_event: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopkRow {
    pub vertex: NodeId,
    pub precision: f64,
    pub wall_time_seconds: f64,
    pub storage_entries: u64,
    pub storage_bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TopkAggregates {
    pub median_precision: f64,
    pub mean_wall_time_seconds: f64,
    pub mean_storage_entries: f64,
    pub mean_storage_bytes: f64,
}

/// Output of the `topk` command.
#[derive(Debug, Clone, Serialize)]
pub struct TopkReport {
    pub schema_version: u32,
    pub config: ConfigEcho,
    pub graph: GraphSummary,
    pub samples: Vec<TopkRow>,
    pub aggregates: TopkAggregates,
}

/// Anything the CLI can emit as JSON or CSV.
pub trait Render {
    fn render_json(&self) -> String;
    fn render_csv(&self) -> String;
}

fn json_of<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

impl Render for Report {
    fn render_json(&self) -> String {
        json_of(self)
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        self.config.csv_comments(&mut out);
        let _ = writeln!(
            out,
            "# nodes={} initial_edges={} events={}",
            self.graph.nodes, self.graph.initial_edges, self.graph.events
        );
        out.push_str(
            "vertex,residual_updates,push_iterations,wall_time_seconds,l1_error,storage_entries,storage_bytes,topk_precision\n",
        );
        for row in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.vertex,
                row.residual_updates,
                row.push_iterations,
                row.wall_time_seconds,
                row.l1_error,
                row.storage_entries,
                row.storage_bytes,
                opt(row.topk_precision),
            );
        }
        out.push_str("# aggregates\n");
        out.push_str(
            "mean_residual_updates,mean_push_iterations,mean_wall_time_seconds,median_l1_error,mean_storage_entries,mean_storage_bytes,median_topk_precision\n",
        );
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            a.mean_residual_updates,
            a.mean_push_iterations,
            a.mean_wall_time_seconds,
            a.median_l1_error,
            a.mean_storage_entries,
            a.mean_storage_bytes,
            opt(a.median_topk_precision),
        );
        out
    }
}

impl Render for CompareReport {
    fn render_json(&self) -> String {
        json_of(self)
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        self.config.csv_comments(&mut out);
        let _ = writeln!(
            out,
            "# nodes={} initial_edges={} events={}",
            self.graph.nodes, self.graph.initial_edges, self.graph.events
        );
        let _ = writeln!(
            out,
            "# incremental_total_seconds={} scratch_total_seconds={} speedup={}",
            self.incremental_total_seconds, self.scratch_total_seconds, self.speedup
        );
        out.push_str("event,incremental_cumulative_seconds,scratch_cumulative_seconds\n");
        for (i, (inc, scr)) in self
            .incremental_cumulative_seconds
            .iter()
            .zip(&self.scratch_cumulative_seconds)
            .enumerate()
        {
            let _ = writeln!(out, "{},{},{}", i + 1, inc, scr);
        }
        out
    }
}

impl Render for TopkReport {
    fn render_json(&self) -> String {
        json_of(self)
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        self.config.csv_comments(&mut out);
        let _ = writeln!(
            out,
            "# nodes={} initial_edges={} events={}",
            self.graph.nodes, self.graph.initial_edges, self.graph.events
        );
        out.push_str("vertex,precision,wall_time_seconds,storage_entries,storage_bytes\n");
        for row in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                row.vertex, row.precision, row.wall_time_seconds, row.storage_entries, row.storage_bytes,
            );
        }
        out.push_str("# aggregates\n");
        out.push_str(
            "median_precision,mean_wall_time_seconds,mean_storage_entries,mean_storage_bytes\n",
        );
        let a = &self.aggregates;
        let _ = writeln!(
            out,
            "{},{},{},{}",
            a.median_precision, a.mean_wall_time_seconds, a.mean_storage_entries, a.mean_storage_bytes,
        );
        out
    }
}

/// Writes a report to `path`, or to stdout when no path is given.
pub fn emit_report<R: Render>(
    report: &R,
    format: ReportFormat,
    path: Option<&Path>,
) -> io::Result<()> {
    let rendered = match format {
        ReportFormat::Json => report.render_json(),
        ReportFormat::Csv => report.render_csv(),
    };
    match path {
        Some(p) => File::create(p)?.write_all(rendered.as_bytes()),
        None => io::stdout().write_all(rendered.as_bytes()),
    }
}
